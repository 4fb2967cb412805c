#include "memrouter/contextualizer.hpp"

#include <cmath>

#include "json.hpp"
#include "memrouter/digest.hpp"
#include "memrouter/error.hpp"
#include "memrouter/http.hpp"
#include "memrouter/rng.hpp"

namespace memrouter {

namespace {

void append(std::vector<std::uint8_t>& buf, const void* p, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  buf.insert(buf.end(), b, b + n);
}

void append_matrix(std::vector<std::uint8_t>& buf, const Matrix& m) {
  const std::int64_t shape[2] = {m.rows(), m.cols()};
  append(buf, shape, sizeof shape);
  append(buf, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

// Row i <- mean of rows 0..i.
Matrix causal_mean(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  RowVector running = RowVector::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    running += x.row(i);
    out.row(i) = running / static_cast<double>(i + 1);
  }
  return out;
}

// Adjoint of causal_mean: dx_j = sum_{i >= j} dp_i / (i + 1).
Matrix causal_mean_adjoint(const Matrix& grad) {
  Matrix out(grad.rows(), grad.cols());
  RowVector running = RowVector::Zero(grad.cols());
  for (Eigen::Index i = grad.rows() - 1; i >= 0; --i) {
    running += grad.row(i) / static_cast<double>(i + 1);
    out.row(i) = running;
  }
  return out;
}

nlohmann::json to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto r = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

std::string IdentityContextualizer::state_hash() const {
  return to_hex(sha256("identity/dim=" + std::to_string(dim_)));
}

MixerContextualizer::MixerContextualizer(std::size_t dim, std::uint64_t seed, std::size_t blocks)
    : dim_(dim), seed_(seed) {
  if (dim == 0) throw DimensionError("mixer dimension must be positive");
  Rng rng(seed);
  const double bound = std::sqrt(3.0 / static_cast<double>(dim));
  const auto d = static_cast<Eigen::Index>(dim);
  for (std::size_t b = 0; b < blocks; ++b) {
    Block block{Matrix(d, d), RowVector(d)};
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) block.mix(i, j) = rng.uniform(-bound, bound);
    }
    for (Eigen::Index j = 0; j < d; ++j) block.bias(j) = rng.uniform(-0.1, 0.1);
    blocks_.push_back(std::move(block));
  }
}

Matrix MixerContextualizer::forward(const Matrix& h) const {
  if (static_cast<std::size_t>(h.cols()) != dim_) {
    throw DimensionError("mixer: expected width " + std::to_string(dim_));
  }
  Matrix x = h;
  Vector rstd;
  for (const auto& b : blocks_) {
    Matrix u = x + causal_mean(x) * b.mix;
    u.rowwise() += b.bias;
    x = layer_norm_rows(u, rstd);
  }
  return x;
}

Matrix MixerContextualizer::backward(const Matrix& h, const Matrix& grad_out) const {
  // Recompute the per-block activations, then walk the blocks in reverse.
  std::vector<Matrix> normed;
  std::vector<Vector> rstds;
  Matrix x = h;
  for (const auto& b : blocks_) {
    Matrix u = x + causal_mean(x) * b.mix;
    u.rowwise() += b.bias;
    Vector rstd;
    x = layer_norm_rows(u, rstd);
    normed.push_back(x);
    rstds.push_back(std::move(rstd));
  }
  Matrix grad = grad_out;
  for (std::size_t k = blocks_.size(); k-- > 0;) {
    const Matrix grad_u = layer_norm_rows_backward(normed[k], rstds[k], grad);
    grad = grad_u + causal_mean_adjoint(grad_u * blocks_[k].mix.transpose());
  }
  return grad;
}

std::string MixerContextualizer::state_hash() const {
  std::vector<std::uint8_t> buf;
  const std::string header = "mixer/dim=" + std::to_string(dim_) + "/seed=" +
                             std::to_string(seed_) + "/blocks=" + std::to_string(blocks_.size());
  append(buf, header.data(), header.size());
  for (const auto& b : blocks_) {
    append_matrix(buf, b.mix);
    append_matrix(buf, b.bias);
  }
  return to_hex(sha256(std::span<const std::uint8_t>(buf)));
}

RemoteContextualizer::RemoteContextualizer(std::string endpoint, std::size_t dim, int timeout_ms)
    : endpoint_(std::move(endpoint)), dim_(dim), timeout_ms_(timeout_ms) {
  if (endpoint_.empty()) throw ProviderError("remote contextualizer requires an endpoint");
}

Matrix RemoteContextualizer::call(const std::string& path, const Matrix& inputs,
                                  const Matrix* grads) const {
  nlohmann::json req{{"inputs", to_json(inputs)}};
  if (grads) req["grad_outputs"] = to_json(*grads);
  auto res = http_post_json(endpoint_ + path, req.dump(), auth_headers(),
                            std::chrono::milliseconds(timeout_ms_));
  if (!res.ok()) throw ProviderError("contextualizer service: " + res.error);
  Matrix out(inputs.rows(), inputs.cols());
  try {
    auto body = nlohmann::json::parse(res.body);
    const auto& rows = body.at("outputs");
    if (static_cast<Eigen::Index>(rows.size()) != inputs.rows()) {
      throw ProviderError("contextualizer service: row count mismatch");
    }
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
      const auto& r = rows[static_cast<std::size_t>(i)];
      if (static_cast<Eigen::Index>(r.size()) != inputs.cols()) {
        throw DimensionError("contextualizer service: width mismatch");
      }
      for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
        out(i, j) = r[static_cast<std::size_t>(j)].get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("contextualizer service: malformed response: ") + e.what());
  }
  return out;
}

Matrix RemoteContextualizer::forward(const Matrix& h) const { return call("/forward", h, nullptr); }

Matrix RemoteContextualizer::backward(const Matrix& h, const Matrix& grad_out) const {
  return call("/vjp", h, &grad_out);
}

std::string RemoteContextualizer::state_hash() const {
  return to_hex(sha256("remote/" + endpoint_ + "/dim=" + std::to_string(dim_)));
}

std::shared_ptr<Contextualizer> make_contextualizer(const ContextualizerConfig& config,
                                                    std::size_t dim) {
  if (config.kind == "identity") return std::make_shared<IdentityContextualizer>(dim);
  if (config.kind == "mixer") {
    return std::make_shared<MixerContextualizer>(dim, config.seed, config.blocks);
  }
  if (config.kind == "remote") {
    return std::make_shared<RemoteContextualizer>(config.endpoint, dim, config.timeout_ms);
  }
  throw ProviderError("unknown contextualizer.kind '" + config.kind + "'");
}

RowVector contextualize(const Contextualizer& f, const Matrix& h) {
  if (h.rows() == 0) throw DimensionError("contextualize: empty chunk sequence");
  Matrix z = f.forward(h);
  return z.row(z.rows() - 1);
}

}  // namespace memrouter
