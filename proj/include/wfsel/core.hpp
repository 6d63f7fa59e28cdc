#pragma once

// Domain types for the stationary law of the Wright-Fisher k-allele model
// with selection and parent-independent mutation, plus the two statistics
// everything else is built on: homozygosity and the selection quadratic form.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace wfsel {

/// Thrown for malformed user input or violated preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Absolute tolerance on the simplex sum for internally generated points.
inline constexpr double kInternalSumTolerance = 1e-9;
/// Absolute tolerance on the simplex sum for ingested data.
inline constexpr double kIngestSumTolerance = 0.005;

/// An interior point of the (k-1)-simplex: allele frequencies of a population.
class SimplexPoint {
 public:
  /// Validates k >= 2, strictly positive entries and |sum - 1| <= tolerance.
  explicit SimplexPoint(std::vector<double> values,
                        double sum_tolerance = kInternalSumTolerance)
      : values_(std::move(values)) {
    if (values_.size() < 2) {
      throw InvalidInput("simplex point needs at least 2 frequencies, got " +
                         std::to_string(values_.size()));
    }
    detail::CompensatedSum total;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double v = values_[i];
      if (!std::isfinite(v) || v <= 0.0) {
        throw InvalidInput("frequency of allele " + std::to_string(i + 1) +
                           " is " + detail::fmt_double(v) +
                           "; all frequencies must be strictly positive");
      }
      total.add(v);
    }
    const double dev = std::abs(total.value() - 1.0);
    if (dev > sum_tolerance) {
      throw InvalidInput("frequencies sum to " +
                         detail::fmt_double(total.value()) +
                         " (deviation " + detail::fmt_double(dev) +
                         " exceeds tolerance " +
                         detail::fmt_double(sum_tolerance) + ")");
    }
  }

  /// Divides by the sum before validating with the internal tolerance.
  static SimplexPoint normalized(std::vector<double> values) {
    detail::CompensatedSum total;
    for (double v : values) total.add(v);
    const double s = total.value();
    if (!(s > 0.0)) throw InvalidInput("cannot normalize a non-positive vector");
    for (double& v : values) v /= s;
    return SimplexPoint(std::move(values));
  }

  static SimplexPoint centroid(std::size_t k) {
    return SimplexPoint(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  std::size_t k() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

 private:
  std::vector<double> values_;
};

/// Scaled mutation rates theta_i = 4 N u_i.
class MutationParams {
 public:
  /// Total rate theta split evenly: theta_i = theta / k.
  static MutationParams symmetric(double theta, std::size_t k) {
    if (!(theta > 0.0) || !std::isfinite(theta)) {
      throw InvalidInput("theta must be positive, got " +
                         detail::fmt_double(theta));
    }
    if (k < 2) throw InvalidInput("k must be at least 2");
    return MutationParams(theta, k, {});
  }

  static MutationParams general(std::vector<double> thetas) {
    if (thetas.size() < 2) throw InvalidInput("need at least 2 mutation rates");
    double total = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      if (!(thetas[i] > 0.0) || !std::isfinite(thetas[i])) {
        throw InvalidInput("mutation rate " + std::to_string(i + 1) +
                           " must be positive");
      }
      total += thetas[i];
    }
    const std::size_t k = thetas.size();
    return MutationParams(total, k, std::move(thetas));
  }

  bool is_symmetric() const noexcept { return per_allele_.empty(); }
  std::size_t k() const noexcept { return k_; }
  /// Sum of the per-allele rates.
  double total() const noexcept { return total_; }

  double operator[](std::size_t i) const {
    return is_symmetric() ? total_ / static_cast<double>(k_) : per_allele_[i];
  }

  std::vector<double> per_allele() const {
    if (!is_symmetric()) return per_allele_;
    return std::vector<double>(k_, total_ / static_cast<double>(k_));
  }

 private:
  MutationParams(double total, std::size_t k, std::vector<double> per_allele)
      : total_(total), k_(k), per_allele_(std::move(per_allele)) {}

  double total_;
  std::size_t k_;
  std::vector<double> per_allele_;  // empty in symmetric mode
};

/// Dense row-major square matrix of scaled selection intensities.
class SelectionMatrix {
 public:
  SelectionMatrix(std::size_t k, std::vector<double> entries)
      : k_(k), entries_(std::move(entries)) {
    if (entries_.size() != k_ * k_) {
      throw InvalidInput("selection matrix needs k*k entries");
    }
  }
  static SelectionMatrix zero(std::size_t k) {
    return SelectionMatrix(k, std::vector<double>(k * k, 0.0));
  }
  static SelectionMatrix scaled_identity(std::size_t k, double sigma) {
    auto m = zero(k);
    for (std::size_t i = 0; i < k; ++i) m(i, i) = sigma;
    return m;
  }

  std::size_t k() const noexcept { return k_; }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_[i * k_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return entries_[i * k_ + j];
  }
  std::span<const double> entries() const noexcept { return entries_; }

  bool is_symmetric(double tol = 1e-12) const {
    for (std::size_t i = 0; i < k_; ++i) {
      for (std::size_t j = i + 1; j < k_; ++j) {
        if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
      }
    }
    return true;
  }

 private:
  std::size_t k_;
  std::vector<double> entries_;
};

/// Either symmetric overdominance Sigma = sigma I (sigma < 0 is homozygote
/// advantage) or a general symmetric matrix Sigma.
class SelectionModel {
 public:
  static SelectionModel symmetric(double sigma) {
    if (!std::isfinite(sigma)) throw InvalidInput("sigma must be finite");
    return SelectionModel(sigma);
  }
  static SelectionModel general(SelectionMatrix matrix) {
    if (!matrix.is_symmetric(1e-12)) {
      throw InvalidInput("selection matrix is not symmetric");
    }
    return SelectionModel(std::move(matrix));
  }

  bool is_symmetric() const noexcept {
    return std::holds_alternative<double>(model_);
  }
  /// Valid only for the symmetric model.
  double sigma() const { return std::get<double>(model_); }
  const SelectionMatrix& matrix() const {
    return std::get<SelectionMatrix>(model_);
  }
  /// Dimension of a general model; nullopt for the scalar model.
  std::optional<std::size_t> k() const {
    if (is_symmetric()) return std::nullopt;
    return matrix().k();
  }
  /// Sigma as a dense matrix of dimension k.
  SelectionMatrix as_matrix(std::size_t k) const {
    if (is_symmetric()) return SelectionMatrix::scaled_identity(k, sigma());
    check_dimension(k);
    return matrix();
  }
  void check_dimension(std::size_t k) const {
    if (!is_symmetric() && matrix().k() != k) {
      throw InvalidInput("selection matrix has dimension " +
                         std::to_string(matrix().k()) + " but data has k = " +
                         std::to_string(k));
    }
  }

 private:
  explicit SelectionModel(double sigma) : model_(sigma) {}
  explicit SelectionModel(SelectionMatrix m) : model_(std::move(m)) {}

  std::variant<double, SelectionMatrix> model_;
};

/// h = sum x_i^2, in [1/k, 1].
struct Homozygosity {
  double value;
  std::size_t k;

  double minimum() const noexcept { return 1.0 / static_cast<double>(k); }
};

/// Sum of squares with compensated accumulation.
inline double sum_of_squares(std::span<const double> x) {
  detail::CompensatedSum s;
  for (double v : x) s.add(v * v);
  return s.value();
}

inline Homozygosity homozygosity(const SimplexPoint& x) {
  return {sum_of_squares(x.values()), x.k()};
}

/// h - 1/k computed as sum (x_i - 1/k)^2, accurate near the centroid.
inline double excess_homozygosity(std::span<const double> x) {
  const double inv_k = 1.0 / static_cast<double>(x.size());
  detail::CompensatedSum s;
  for (double v : x) s.add((v - inv_k) * (v - inv_k));
  return s.value();
}

/// x' Sigma x for a raw frequency vector.
inline double quadratic_form(std::span<const double> x,
                             const SelectionModel& model) {
  if (model.is_symmetric()) return model.sigma() * sum_of_squares(x);
  model.check_dimension(x.size());
  const auto& m = model.matrix();
  const std::size_t k = x.size();
  detail::CompensatedSum s;
  for (std::size_t i = 0; i < k; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < k; ++j) row += m(i, j) * x[j];
    s.add(x[i] * row);
  }
  return s.value();
}

inline double quadratic_form(const SimplexPoint& x,
                             const SelectionModel& model) {
  return quadratic_form(x.values(), model);
}

/// Bundled population frequency data sets.
namespace datasets {

/// Borrelia burgdorferi ospC-type alleles, Qiu et al. (1997), Hereditas 127.
inline SimplexPoint lyme() {
  return SimplexPoint({0.103, 0.375, 0.270, 0.252});
}

/// KIR locus DL1/S1, UK population, Norman et al. (2004), Immunogenetics 56.
inline SimplexPoint kir() {
  return SimplexPoint({0.22, 0.21, 0.17, 0.16, 0.15, 0.04, 0.03, 0.02});
}

inline std::optional<SimplexPoint> by_name(std::string_view name) {
  if (name == "lyme") return lyme();
  if (name == "kir") return kir();
  return std::nullopt;
}

}  // namespace datasets

/// Parses "lyme", "kir", or a comma/whitespace separated list of decimals.
/// The sum must be within 0.005 of one; data are never renormalized.
inline SimplexPoint parse_frequencies(std::string_view text) {
  auto is_sep = [](char c) {
    return c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
           c == ';';
  };
  std::string_view trimmed = text;
  while (!trimmed.empty() && is_sep(trimmed.front())) trimmed.remove_prefix(1);
  while (!trimmed.empty() && is_sep(trimmed.back())) trimmed.remove_suffix(1);
  if (auto named = datasets::by_name(trimmed)) return *named;

  std::vector<double> values;
  std::size_t pos = 0;
  while (pos < trimmed.size()) {
    while (pos < trimmed.size() && is_sep(trimmed[pos])) ++pos;
    if (pos >= trimmed.size()) break;
    std::size_t end = pos;
    while (end < trimmed.size() && !is_sep(trimmed[end])) ++end;
    const std::string_view token = trimmed.substr(pos, end - pos);
    double v = 0.0;
    const char* first = token.data();
    if (!token.empty() && token.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw InvalidInput("not a number: '" + std::string(token) + "'");
    }
    values.push_back(v);
    pos = end;
  }
  if (values.size() < 2) {
    throw InvalidInput("need at least 2 frequencies, got " +
                       std::to_string(values.size()));
  }
  return SimplexPoint(std::move(values), kIngestSumTolerance);
}

}  // namespace wfsel
