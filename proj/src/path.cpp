#include "telecoupler/path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace telecoupler {

ScalingParams::ScalingParams(double v0_, double lambda_, double L_, double T_)
    : v0(v0_), lambda(lambda_), L(L_), T(T_) {
  if (v0 == 0.0 || !std::isfinite(v0)) throw std::invalid_argument("ScalingParams: v0 must be nonzero");
  if (!(lambda > 0.0)) throw std::invalid_argument("ScalingParams: lambda must be > 0");
  if (!(L > 0.0)) throw std::invalid_argument("ScalingParams: L must be > 0");
  if (!(T > 0.0)) throw std::invalid_argument("ScalingParams: T must be > 0");
}

double ScalingParams::l_star() const { return lambda * L / std::fabs(v0); }

ScalingParams ScalingParams::from_dimensionless(double t_star, double l_star) {
  if (!(t_star > 0.0) || !(l_star > 0.0))
    throw std::invalid_argument("ScalingParams: T* and L* must be > 0");
  return ScalingParams(1.0, 1.0, l_star, t_star);
}

WaitingTimes::WaitingTimes(std::vector<double> gaps_, double tail_gap_)
    : gaps(std::move(gaps_)), tail_gap(tail_gap_) {
  for (double g : gaps)
    if (!(g > 0.0)) throw std::invalid_argument("WaitingTimes: gaps must be > 0");
  if (!(tail_gap > 0.0)) throw std::invalid_argument("WaitingTimes: tail_gap must be > 0");
}

PiecewisePath::PiecewisePath(PathKind kind, std::vector<double> breakpoints, std::vector<double> values,
                             std::vector<double> slopes, double horizon)
    : kind_(kind),
      breakpoints_(std::move(breakpoints)),
      values_(std::move(values)),
      slopes_(std::move(slopes)),
      horizon_(horizon) {
  if (breakpoints_.empty() || breakpoints_.front() != 0.0)
    throw std::invalid_argument("PiecewisePath: breakpoints must start at 0");
  if (breakpoints_.size() != values_.size() || breakpoints_.size() != slopes_.size())
    throw std::invalid_argument("PiecewisePath: breakpoints/values/slopes size mismatch");
  for (std::size_t k = 1; k < breakpoints_.size(); ++k)
    if (!(breakpoints_[k] > breakpoints_[k - 1]))
      throw std::invalid_argument("PiecewisePath: breakpoints must be strictly increasing");
  if (!(horizon_ >= 0.0)) throw std::invalid_argument("PiecewisePath: horizon must be >= 0");
}

PiecewisePath PiecewisePath::step_path(std::vector<double> jump_times, const std::vector<double>& jump_sizes,
                                       double horizon) {
  if (jump_times.size() != jump_sizes.size())
    throw std::invalid_argument("step_path: jump_times/jump_sizes size mismatch");
  std::vector<double> bp{0.0}, vals{0.0};
  double level = 0.0;
  for (std::size_t k = 0; k < jump_times.size(); ++k) {
    level += jump_sizes[k];
    bp.push_back(jump_times[k]);
    vals.push_back(level);
  }
  std::vector<double> slopes(bp.size(), 0.0);
  return PiecewisePath(PathKind::step, std::move(bp), std::move(vals), std::move(slopes), horizon);
}

PiecewisePath PiecewisePath::ray(double slope, double horizon) {
  return PiecewisePath(PathKind::linear, {0.0}, {0.0}, {slope}, horizon);
}

std::size_t PiecewisePath::segment_index(double t) const {
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.begin()) return 0;  // t < 0 clamps to the first segment
  return static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
}

double PiecewisePath::eval(double t) const {
  std::size_t k = segment_index(t);
  return values_[k] + slopes_[k] * (t - breakpoints_[k]);
}

PiecewisePath PiecewisePath::scaled(double a) const {
  PiecewisePath out = *this;
  for (auto& v : out.values_) v *= a;
  for (auto& s : out.slopes_) s *= a;
  return out;
}

PiecewisePath PiecewisePath::time_rescaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("time_rescaled: factor must be > 0");
  PiecewisePath out = *this;
  for (auto& b : out.breakpoints_) b *= factor;
  for (auto& s : out.slopes_) s /= factor;
  out.horizon_ = horizon_ * factor;
  return out;
}

std::string PiecewisePath::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind_ == PathKind::linear ? "linear" : "step";
  j["breakpoints"] = breakpoints_;
  j["values"] = values_;
  j["slopes"] = slopes_;
  j["horizon"] = horizon_;
  return j.dump();
}

PiecewisePath PiecewisePath::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  PathKind kind = j.at("kind").get<std::string>() == "step" ? PathKind::step : PathKind::linear;
  return PiecewisePath(kind, j.at("breakpoints").get<std::vector<double>>(),
                       j.at("values").get<std::vector<double>>(), j.at("slopes").get<std::vector<double>>(),
                       j.at("horizon").get<double>());
}

}  // namespace telecoupler
