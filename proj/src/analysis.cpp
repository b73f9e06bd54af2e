#include "mxrot/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mxrot/errors.hpp"

namespace mxrot {

std::string to_string(BlockLabel l) { return l == BlockLabel::Regular ? "regular" : "outlier"; }

double magnitude_threshold(const Tensor& t, double q) {
  if (t.empty()) throw InvalidArgument("magnitude_threshold: empty tensor");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("outlier quantile must lie in [0, 1]");
  std::vector<float> mags(t.size());
  std::transform(t.data().begin(), t.data().end(), mags.begin(), [](float v) { return std::fabs(v); });
  const double n = static_cast<double>(mags.size());
  // The small slack keeps q * n = 1.0000000000000002 from adding a rank.
  auto k = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  k = std::min(k, mags.size() - 1);
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end(), std::greater<float>());
  return mags[k];
}

BlockReport classify_blocks_at(const Tensor& t, std::size_t block_size, double threshold) {
  if (t.empty()) throw InvalidArgument("classify_blocks: empty tensor");
  if (block_size == 0) throw InvalidArgument("classify_blocks: block size must be positive");
  BlockReport rep;
  rep.block_size = block_size;
  rep.outlier_threshold = threshold;
  const std::size_t nb = (t.cols() + block_size - 1) / block_size;
  rep.blocks.reserve(t.rows() * nb);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto row = t.row(r);
    for (std::size_t b = 0; b < nb; ++b) {
      BlockStats s;
      s.index = r * nb + b;
      s.row = r;
      s.block_in_row = b;
      const std::size_t c1 = std::min(t.cols(), (b + 1) * block_size);
      for (std::size_t c = b * block_size; c < c1; ++c) s.amax = std::max(s.amax, std::fabs(row[c]));
      s.label = static_cast<double>(s.amax) > threshold ? BlockLabel::Outlier : BlockLabel::Regular;
      (s.label == BlockLabel::Regular ? rep.regular_count : rep.outlier_count)++;
      rep.blocks.push_back(s);
    }
  }
  return rep;
}

BlockReport classify_blocks(const Tensor& t, std::size_t block_size, double outlier_quantile) {
  BlockReport rep = classify_blocks_at(t, block_size, magnitude_threshold(t, outlier_quantile));
  rep.outlier_quantile = outlier_quantile;
  return rep;
}

namespace {

struct BlockErr {
  double mse;
  double rel_max;
};

std::vector<BlockErr> per_block_errors(const Tensor& t, const Tensor& q, std::size_t block_size) {
  const std::size_t nb = (t.cols() + block_size - 1) / block_size;
  std::vector<BlockErr> out(t.rows() * nb);
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t c0 = b * block_size;
      const std::size_t c1 = std::min(t.cols(), c0 + block_size);
      double se = 0.0;
      double rel = 0.0;
      for (std::size_t c = c0; c < c1; ++c) {
        const double x = t(r, c);
        const double d = std::fabs(x - static_cast<double>(q(r, c)));
        se += d * d;
        if (x != 0.0) rel = std::max(rel, d / std::fabs(x));
      }
      out[r * nb + b] = {se / static_cast<double>(c1 - c0), rel};
    }
  }
  return out;
}

void summarize_regular(BlockReport& rep) {
  double sum = 0.0;
  rep.regular_count = rep.outlier_count = 0;
  for (const auto& b : rep.blocks) {
    if (b.label == BlockLabel::Regular) {
      ++rep.regular_count;
      sum += b.mse;
    } else {
      ++rep.outlier_count;
    }
  }
  rep.mean_regular_mse = rep.regular_count ? sum / static_cast<double>(rep.regular_count) : 0.0;
  rep.log10_mean_regular_mse = rep.regular_count ? std::log10(rep.mean_regular_mse)
                                                 : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

BlockReport block_error_report(const Tensor& t, const QuantConfig& cfg, BlockReport skeleton,
                               const std::optional<QuantConfig>& compare) {
  const std::size_t nb = (t.cols() + skeleton.block_size - 1) / skeleton.block_size;
  if (skeleton.blocks.size() != t.rows() * nb)
    throw InvalidArgument("block_error_report: skeleton does not match tensor shape");
  if (cfg.effective_block(t.cols()) != skeleton.block_size)
    throw InvalidArgument("block_error_report: format block size differs from the report block size");
  const auto err = per_block_errors(t, fake_quantize(t, cfg), skeleton.block_size);
  for (std::size_t i = 0; i < err.size(); ++i) {
    skeleton.blocks[i].mse = err[i].mse;
    skeleton.blocks[i].relative_error_max = err[i].rel_max;
  }
  if (compare) {
    if (compare->effective_block(t.cols()) != skeleton.block_size)
      throw InvalidArgument("block_error_report: comparison block size differs from the report block size");
    const auto cerr = per_block_errors(t, fake_quantize(t, *compare), skeleton.block_size);
    for (std::size_t i = 0; i < cerr.size(); ++i) {
      skeleton.blocks[i].compare_mse = cerr[i].mse;
      skeleton.blocks[i].compare_relative_error_max = cerr[i].rel_max;
    }
  }
  skeleton.config = cfg;
  skeleton.compare_config = compare;
  summarize_regular(skeleton);
  return skeleton;
}

BlockElements block_elements(const Tensor& t, std::size_t row, std::size_t block, std::size_t block_size,
                             const QuantConfig& cfg, const QuantConfig& compare) {
  if (row >= t.rows() || block * block_size >= t.cols())
    throw InvalidArgument("block_elements: block index out of range");
  const std::size_t c0 = block * block_size;
  const std::size_t len = std::min(block_size, t.cols() - c0);
  std::vector<float> vals(t.row(row).begin() + static_cast<std::ptrdiff_t>(c0),
                          t.row(row).begin() + static_cast<std::ptrdiff_t>(c0 + len));
  const Tensor blk(1, len, vals);
  const Tensor q1 = fake_quantize(blk, cfg);
  const Tensor q2 = fake_quantize(blk, compare);
  BlockElements out;
  out.values = vals;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < len; ++i) {
    const double x = vals[i];
    const double e1 = std::fabs(x - q1(0, i));
    const double e2 = std::fabs(x - q2(0, i));
    out.relative_error.push_back(x != 0.0 ? e1 / std::fabs(x) : 0.0);
    out.compare_relative_error.push_back(x != 0.0 ? e2 / std::fabs(x) : 0.0);
    out.error_ratio.push_back(e2 != 0.0 ? e1 / e2 : (e1 == 0.0 ? nan : std::numeric_limits<double>::infinity()));
  }
  return out;
}

ThresholdCurve threshold_fractions(const Tensor& t, const std::vector<double>& thresholds) {
  if (t.empty()) throw InvalidArgument("threshold_fractions: empty tensor");
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (!(thresholds[i] > thresholds[i - 1]))
      throw InvalidArgument("threshold_fractions: thresholds must be strictly ascending");
  std::vector<float> mags(t.size());
  std::transform(t.data().begin(), t.data().end(), mags.begin(), [](float v) { return std::fabs(v); });
  std::sort(mags.begin(), mags.end());
  ThresholdCurve out;
  out.thresholds = thresholds;
  for (double th : thresholds) {
    const auto it = std::upper_bound(mags.begin(), mags.end(), th,
                                     [](double a, float b) { return a < static_cast<double>(b); });
    out.fractions.push_back(static_cast<double>(mags.end() - it) / static_cast<double>(mags.size()));
  }
  return out;
}

RegularLossDelta regular_block_loss_delta(const Tensor& t, const QuantConfig& cfg, const RotationMatrix& rotation,
                                          double outlier_quantile) {
  const std::size_t bs = cfg.effective_block(t.cols());
  const Tensor rotated = rotate_activations(t, rotation);

  RegularLossDelta out;
  out.threshold_pre = magnitude_threshold(t, outlier_quantile);
  out.threshold_post = magnitude_threshold(rotated, outlier_quantile);

  const auto before = block_error_report(t, cfg, classify_blocks_at(t, bs, out.threshold_pre));
  const auto after = block_error_report(rotated, cfg, classify_blocks_at(rotated, bs, out.threshold_pre));
  auto after_own = classify_blocks_at(rotated, bs, out.threshold_post);
  for (std::size_t i = 0; i < after_own.blocks.size(); ++i) after_own.blocks[i].mse = after.blocks[i].mse;
  summarize_regular(after_own);

  if (before.regular_count == 0 || after.regular_count == 0)
    throw InvalidArgument("regular_block_loss_delta: no regular blocks found");
  out.before = before.mean_regular_mse;
  out.after = after.mean_regular_mse;
  out.after_own_threshold = after_own.mean_regular_mse;
  out.before_log10 = std::log10(out.before);
  out.after_log10 = std::log10(out.after);
  out.after_own_threshold_log10 = after_own.regular_count ? std::log10(out.after_own_threshold)
                                                          : std::numeric_limits<double>::quiet_NaN();
  out.regular_before = before.regular_count;
  out.regular_after = after.regular_count;
  out.regular_after_own = after_own.regular_count;
  return out;
}

RegularLossDelta regular_block_loss_delta(const Tensor& t, const QuantConfig& cfg, const RotationSpec& rotation,
                                          double outlier_quantile) {
  return regular_block_loss_delta(t, cfg, build_rotation(rotation, t.cols()), outlier_quantile);
}

std::vector<float> block_scale_distribution(const Tensor& t, std::size_t block_size) {
  if (block_size == 0) throw InvalidArgument("block_scale_distribution: block size must be positive");
  const std::size_t nb = (t.cols() + block_size - 1) / block_size;
  std::vector<float> out(t.rows() * nb, 0.0f);
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) {
      float& m = out[r * nb + c / block_size];
      m = std::max(m, std::fabs(t(r, c)));
    }
  return out;
}

std::size_t count_grown_blocks(const std::vector<float>& before, const std::vector<float>& after, double factor) {
  if (before.size() != after.size()) throw InvalidArgument("count_grown_blocks: length mismatch");
  std::size_t n = 0;
  for (std::size_t i = 0; i < before.size(); ++i)
    if (static_cast<double>(after[i]) > factor * static_cast<double>(before[i])) ++n;
  return n;
}

std::vector<SweepPoint> rotation_dim_sweep(const Tensor& t, const QuantConfig& cfg,
                                           const std::vector<std::size_t>& dims, std::uint64_t seed) {
  std::vector<SweepPoint> out;
  for (std::size_t g : dims) {
    if (!is_power_of_two(g) || t.cols() % g != 0)
      throw InvalidArgument("rotation_dim_sweep: dimension " + std::to_string(g) +
                            " must be a power of two dividing width " + std::to_string(t.cols()));
  }
  for (std::size_t g : dims) {
    const RotationSpec spec{RotationScope::BlockDiagonal, g, seed, true};
    const Tensor z = rotate_activations(t, build_rotation(spec, t.cols()));
    out.push_back({g, mse(z, fake_quantize(z, cfg))});
  }
  return out;
}

std::size_t sweep_argmin(const std::vector<SweepPoint>& sweep) {
  if (sweep.empty()) throw InvalidArgument("sweep_argmin: empty sweep");
  return std::min_element(sweep.begin(), sweep.end(), [](const auto& a, const auto& b) { return a.mse < b.mse; })
      ->dim;
}

}  // namespace mxrot
