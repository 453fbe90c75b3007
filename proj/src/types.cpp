#include "bsmr/types.hpp"

#include <cmath>

#include "bsmr/errors.hpp"

namespace bsmr {

GroupStructure::GroupStructure(std::vector<std::size_t> sizes)
    : sizes_(std::move(sizes)) {
  offsets_.reserve(sizes_.size());
  for (std::size_t s : sizes_) {
    if (s == 0) throw DataError("group sizes must be positive");
    offsets_.push_back(total_);
    total_ += s;
  }
}

std::size_t GroupStructure::group_of(std::size_t predictor) const {
  for (std::size_t g = 0; g < sizes_.size(); ++g)
    if (predictor < offsets_[g] + sizes_[g]) return g;
  throw DataError("predictor index out of range");
}

namespace {

std::string cell(const char* block, std::size_t i, std::size_t j) {
  return std::string(block) + " row " + std::to_string(i + 1) + ", column " +
         std::to_string(j + 1);
}

void check_finite(const Matrix& m, const char* block) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j)))
        throw DataError("non-finite value at " + cell(block, i, j));
}

}  // namespace

void MixedResponseDataset::validate() const {
  if (n() == 0) throw DataError("dataset has no observations");
  if (q() == 0) throw DataError("dataset has no response columns");
  if (u.rows() != n() || z.rows() != n() || w.rows() != n())
    throw DataError("response blocks disagree on the number of rows");
  if (groups.n_predictors() != p())
    throw DataError("group sizes sum to " +
                    std::to_string(groups.n_predictors()) + " but x has " +
                    std::to_string(p()) + " predictors");
  check_finite(x, "x");
  check_finite(u, "u");
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) {
      const double v = z(i, j);
      if (!std::isfinite(v) || v < 0.0 || v != std::floor(v))
        throw DataError("count is not a non-negative integer at " +
                        cell("z", i, j));
    }
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      const double v = w(i, j);
      if (v != 0.0 && v != 1.0)
        throw DataError("binary value is not 0 or 1 at " + cell("w", i, j));
    }
}

void Hyperparameters::validate() const {
  if (a1 <= 0.0 || a2 <= 0.0 || a3 <= 0.0 || a4 <= 0.0 || a5 < 0.0 || a6 < 0.0)
    throw ConfigError("Beta prior parameters must be positive");
  if (sigma0 <= 0.0 || sigma1 <= 0.0)
    throw ConfigError("spike and slab sds must be positive");
  if (sigma1 <= sigma0)
    throw ConfigError("slab sd must exceed spike sd");
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (d <= 0.0) throw ConfigError("d must be positive");
  if (em_interval == 0) throw ConfigError("em_interval must be positive");
  for (const auto& pin : {pin_pi1, pin_pi2, pin_pi3})
    if (pin && (*pin < 0.0 || *pin > 1.0))
      throw ConfigError("pinned probabilities must lie in [0,1]");
}

std::size_t ModelState::edge_index(std::size_t i, std::size_t j, std::size_t q) {
  // strict upper triangle, row-major: (i,j) with i < j
  return i * q - i * (i + 1) / 2 + (j - i - 1);
}

}  // namespace bsmr
