#include "mxrot/rotopt.hpp"

#include <Eigen/Core>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <string>

#include "mxrot/errors.hpp"

namespace mxrot {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_shapes(const Tensor& x, const RotationMatrix& r) {
  if (x.cols() != r.width())
    throw InvalidArgument("rotation width " + std::to_string(r.width()) + " does not match tensor width " +
                          std::to_string(x.cols()));
}

}  // namespace

double quant_loss(const Tensor& x, const RotationMatrix& r, const QuantConfig& cfg) {
  check_shapes(x, r);
  const Tensor z = rotate_activations(x, r);
  return mse(z, fake_quantize(z, cfg));
}

SteGradient ste_gradient(const Tensor& x, const RotationMatrix& r, const QuantConfig& cfg) {
  check_shapes(x, r);
  const Tensor z = rotate_activations(x, r);
  const Tensor zq = fake_quantize(z, cfg);
  const std::size_t g = r.block_dim();
  const std::size_t cols = x.cols();
  const std::size_t bs = cfg.effective_block(cols);
  const double inv_n = 1.0 / static_cast<double>(z.size());
  const double max_code = cfg.element_format().max_code_value();

  SteGradient out;
  out.loss = mse(z, zq);
  out.blocks.assign(r.block_count(), std::vector<double>(g * g, 0.0));
  const auto zd = z.data();
  const auto qd = zq.data();

  // dL/dz = 2 (q - z)(dq/dz - 1) / n, and dq/dz is 1 unless z saturated, so
  // only saturated elements carry gradient. They are rare; collect them first.
  std::vector<double> dz(z.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < z.rows(); ++row) {
    for (std::size_t c0 = 0; c0 < cols; c0 += bs) {
      const std::size_t c1 = std::min(cols, c0 + bs);
      float amax = 0.0f;
      for (std::size_t c = c0; c < c1; ++c) amax = std::max(amax, std::fabs(zd[row * cols + c]));
      const double limit = max_code * static_cast<double>(scale_for_amax(amax, cfg));
      for (std::size_t c = c0; c < c1; ++c) {
        const double zv = zd[row * cols + c];
        if (std::fabs(zv) > limit)
          dz[row * cols + c] = -2.0 * (static_cast<double>(qd[row * cols + c]) - zv) * inv_n;
      }
    }
  }
  // G_b[:, j] += X[row, block b]^T * dL/dz[row, b g + j]
#pragma omp parallel for schedule(dynamic)
  for (std::size_t b = 0; b < r.block_count(); ++b) {
    auto& gb = out.blocks[b];
    for (std::size_t row = 0; row < z.rows(); ++row) {
      const double* drow = dz.data() + row * cols + b * g;
      for (std::size_t j = 0; j < g; ++j) {
        if (drow[j] == 0.0) continue;
        const double d = drow[j];
        for (std::size_t i = 0; i < g; ++i) gb[i * g + j] += static_cast<double>(x(row, b * g + i)) * d;
      }
    }
  }
  return out;
}

double ste_surrogate_loss(const Tensor& x, const std::vector<std::vector<double>>& r_blocks,
                          const RotationMatrix& frozen, const QuantConfig& cfg) {
  check_shapes(x, frozen);
  const std::size_t g = frozen.block_dim();
  if (r_blocks.size() != frozen.block_count()) throw InvalidArgument("surrogate: block count mismatch");
  const std::size_t cols = x.cols();
  const std::size_t bs = cfg.effective_block(cols);
  const double max_code = cfg.element_format().max_code_value();
  const Tensor z_frozen = rotate_activations(x, frozen);

  double loss = 0.0;
  std::vector<double> zrow(cols);
  for (std::size_t row = 0; row < x.rows(); ++row) {
    for (std::size_t b = 0; b < r_blocks.size(); ++b)
      for (std::size_t j = 0; j < g; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g; ++i) acc += static_cast<double>(x(row, b * g + i)) * r_blocks[b][i * g + j];
        zrow[b * g + j] = acc;
      }
    for (std::size_t c0 = 0; c0 < cols; c0 += bs) {
      const std::size_t c1 = std::min(cols, c0 + bs);
      float amax = 0.0f;
      for (std::size_t c = c0; c < c1; ++c) amax = std::max(amax, std::fabs(z_frozen(row, c)));
      const double limit = max_code * static_cast<double>(scale_for_amax(amax, cfg));
      for (std::size_t c = c0; c < c1; ++c) {
        const double clipped = std::clamp(zrow[c], -limit, limit);
        loss += (clipped - zrow[c]) * (clipped - zrow[c]);
      }
    }
  }
  return loss / static_cast<double>(x.size());
}

CayleyState make_cayley_state(const Tensor& x, RotationMatrix r, const QuantConfig& cfg, double step_size) {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw InvalidArgument("cayley step size must be positive");
  const double loss0 = quant_loss(x, r, cfg);
  return CayleyState{std::move(r), step_size, 0, {loss0}};
}

CayleyState cayley_step(CayleyState state, const Tensor& x, const QuantConfig& cfg) {
  const SteGradient grad = ste_gradient(x, state.rotation, cfg);
  const std::size_t g = state.rotation.block_dim();
  const double half = 0.5 * state.step_size;

  std::vector<Tensor> blocks(state.rotation.blocks().begin(), state.rotation.blocks().end());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& gb = grad.blocks[b];
    if (std::all_of(gb.begin(), gb.end(), [](double v) { return v == 0.0; })) continue;
    RowMatrix rb(g, g);
    RowMatrix gm(g, g);
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t j = 0; j < g; ++j) {
        rb(i, j) = blocks[b](i, j);
        gm(i, j) = gb[i * g + j];
      }
    const RowMatrix a = gm * rb.transpose() - rb * gm.transpose();
    const RowMatrix eye = RowMatrix::Identity(g, g);
    const Eigen::PartialPivLU<RowMatrix> lu(eye + half * a);
    if (!(lu.rcond() > 1e-12))
      throw NumericalError("cayley step: I + (eta/2) A is singular; reduce the step size");
    const RowMatrix next = lu.solve((eye - half * a) * rb);
    std::vector<float> d(g * g);
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t j = 0; j < g; ++j) d[i * g + j] = static_cast<float>(next(i, j));
    blocks[b] = Tensor(g, g, std::move(d));
  }

  if (state.loss_history.size() <= state.iteration) state.loss_history.resize(state.iteration + 1);
  state.loss_history[state.iteration] = grad.loss;
  state.rotation = RotationMatrix(state.rotation.spec(), std::move(blocks));
  ++state.iteration;
  return state;
}

CayleyState optimize_rotation(const Tensor& x, RotationMatrix init, const QuantConfig& cfg, std::size_t steps,
                              double step_size) {
  CayleyState state = make_cayley_state(x, std::move(init), cfg, step_size);
  for (std::size_t s = 0; s < steps; ++s) state = cayley_step(std::move(state), x, cfg);
  state.loss_history.push_back(quant_loss(x, state.rotation, cfg));
  return state;
}

}  // namespace mxrot
