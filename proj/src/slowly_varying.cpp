#include "renewal0/slowly_varying.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace renewal0 {

namespace {
const double kE = std::exp(1.0);
}

struct SlowlyVarying::Node {
  enum class Kind { Const, LogPow, LogLogPow, Product, Power };
  Kind kind;
  double param = 0.0;  // c for Const, a for the log kinds, s for Power
  std::vector<std::shared_ptr<const Node>> children;

  double eval(double x) const {
    switch (kind) {
      case Kind::Const:
        return param;
      case Kind::LogPow:
        return std::pow(std::log(x + kE), param);
      case Kind::LogLogPow:
        return std::pow(std::log(std::log(x + kE)), param);
      case Kind::Product: {
        double p = 1.0;
        for (const auto& ch : children) p *= ch->eval(x);
        return p;
      }
      case Kind::Power:
        return std::pow(children[0]->eval(x), param);
    }
    return 0.0;
  }

  // phi(e^u) evaluated directly in u; exact for u >= asym_u0 where
  // log(e^u + e) = u and loglog = log u to double rounding.
  double eval_log(double u) const {
    switch (kind) {
      case Kind::Const:
        return param;
      case Kind::LogPow: {
        double l = u < 700.0 ? std::log(std::exp(u) + kE) : u;
        return std::pow(l, param);
      }
      case Kind::LogLogPow: {
        double l = u < 700.0 ? std::log(std::exp(u) + kE) : u;
        return std::pow(std::log(l), param);
      }
      case Kind::Product: {
        double p = 1.0;
        for (const auto& ch : children) p *= ch->eval_log(u);
        return p;
      }
      case Kind::Power:
        return std::pow(children[0]->eval_log(u), param);
    }
    return 0.0;
  }

  double log_deriv(double x) const {
    switch (kind) {
      case Kind::Const:
        return 0.0;
      case Kind::LogPow:
        return param / ((x + kE) * std::log(x + kE));
      case Kind::LogLogPow: {
        double l = std::log(x + kE);
        return param / ((x + kE) * l * std::log(l));
      }
      case Kind::Product: {
        double s = 0.0;
        for (const auto& ch : children) s += ch->log_deriv(x);
        return s;
      }
      case Kind::Power:
        return param * children[0]->log_deriv(x);
    }
    return 0.0;
  }

  double log_exp() const {
    switch (kind) {
      case Kind::Const:
        return 0.0;
      case Kind::LogPow:
        return param;
      case Kind::LogLogPow:
        return 0.0;
      case Kind::Product: {
        double s = 0.0;
        for (const auto& ch : children) s += ch->log_exp();
        return s;
      }
      case Kind::Power:
        return param * children[0]->log_exp();
    }
    return 0.0;
  }

  double loglog_exp() const {
    switch (kind) {
      case Kind::Const:
        return 0.0;
      case Kind::LogPow:
        return 0.0;
      case Kind::LogLogPow:
        return param;
      case Kind::Product: {
        double s = 0.0;
        for (const auto& ch : children) s += ch->loglog_exp();
        return s;
      }
      case Kind::Power:
        return param * children[0]->loglog_exp();
    }
    return 0.0;
  }

  double lead() const {
    switch (kind) {
      case Kind::Const:
        return param;
      case Kind::LogPow:
      case Kind::LogLogPow:
        return 1.0;
      case Kind::Product: {
        double p = 1.0;
        for (const auto& ch : children) p *= ch->lead();
        return p;
      }
      case Kind::Power:
        return std::pow(children[0]->lead(), param);
    }
    return 1.0;
  }

  nlohmann::json to_json() const {
    switch (kind) {
      case Kind::Const:
        return {{"kind", "const"}, {"c", param}};
      case Kind::LogPow:
        return {{"kind", "logpow"}, {"a", param}};
      case Kind::LogLogPow:
        return {{"kind", "loglogpow"}, {"a", param}};
      case Kind::Product: {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& ch : children) arr.push_back(ch->to_json());
        return {{"kind", "product"}, {"factors", arr}};
      }
      case Kind::Power:
        return {{"kind", "power"}, {"s", param}, {"base", children[0]->to_json()}};
    }
    return {};
  }
};

SlowlyVarying SlowlyVarying::constant(double c) {
  if (!(c > 0.0)) throw Error("SlowlyVarying::constant: c must be positive");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Const;
  n->param = c;
  return SlowlyVarying(std::move(n));
}

SlowlyVarying SlowlyVarying::log_pow(double a) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::LogPow;
  n->param = a;
  return SlowlyVarying(std::move(n));
}

SlowlyVarying SlowlyVarying::loglog_pow(double a) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::LogLogPow;
  n->param = a;
  return SlowlyVarying(std::move(n));
}

SlowlyVarying SlowlyVarying::product(std::vector<SlowlyVarying> factors) {
  if (factors.empty()) return constant(1.0);
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Product;
  for (auto& f : factors) n->children.push_back(f.node_);
  return SlowlyVarying(std::move(n));
}

SlowlyVarying SlowlyVarying::pow(double s) const {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Power;
  n->param = s;
  n->children.push_back(node_);
  SlowlyVarying r(std::move(n));
  r.floor_ = floor_;
  return r;
}

double SlowlyVarying::operator()(double x) const {
  if (x < floor_) x = floor_;
  return node_->eval(x);
}

double SlowlyVarying::derivative(double x) const {
  if (x < floor_) return 0.0;
  return node_->eval(x) * node_->log_deriv(x);
}

double SlowlyVarying::log_derivative(double x) const {
  if (x < floor_) return 0.0;
  return node_->log_deriv(x);
}

double SlowlyVarying::log_exponent() const { return node_->log_exp(); }
double SlowlyVarying::loglog_exponent() const { return node_->loglog_exp(); }
double SlowlyVarying::lead() const { return node_->lead(); }

double SlowlyVarying::eval_log(double u) const {
  double uf = std::log(floor_);
  if (u < uf) u = uf;
  return node_->eval_log(u);
}

nlohmann::json SlowlyVarying::to_json() const { return node_->to_json(); }

SlowlyVarying SlowlyVarying::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "const") return constant(j.at("c").get<double>());
  if (kind == "logpow") return log_pow(j.at("a").get<double>());
  if (kind == "loglogpow") return loglog_pow(j.at("a").get<double>());
  if (kind == "product") {
    std::vector<SlowlyVarying> fs;
    for (const auto& f : j.at("factors")) fs.push_back(from_json(f));
    return product(std::move(fs));
  }
  if (kind == "power") {
    return from_json(j.at("base")).pow(j.at("s").get<double>());
  }
  throw BadConfig("unknown slowly varying kind: " + kind);
}

SlowlyVaryingConjugate::SlowlyVaryingConjugate(SlowlyVarying phi,
                                               double bracket_growth)
    : phi_(std::move(phi)), bracket_growth_(bracket_growth) {
  if (!(bracket_growth_ > 1.0)) {
    throw Error("SlowlyVaryingConjugate: bracket growth must exceed 1");
  }
  auto h = [this](double y) { return y * phi_(y); };
  // Octave scan for the monotone branch: stop at eight consecutive increases.
  double y = 1.0;
  double prev = h(y);
  int increases = 0;
  double run_start = y;
  for (int j = 0; j < 1000; ++j) {
    double yn = y * 2.0;
    double cur = h(yn);
    if (cur > prev) {
      if (increases == 0) run_start = y;
      ++increases;
      if (increases >= 8) break;
    } else {
      increases = 0;
    }
    y = yn;
    prev = cur;
    if (y > 1e280) throw NonMonotoneBracket("y*phi(y) never turned increasing");
  }
  y_mono_ = run_start;
  // Everything reached from [1, y_mono] must be excluded from queries.
  double hmax = 0.0;
  const int per_octave = 64;
  double lo = 1.0;
  while (lo < y_mono_ * (1.0 - 1e-12)) {
    for (int i = 0; i < per_octave; ++i) {
      double yy = lo * std::pow(2.0, static_cast<double>(i) / per_octave);
      if (yy > y_mono_) break;
      hmax = std::max(hmax, h(yy));
    }
    lo *= 2.0;
  }
  hmax = std::max(hmax, h(y_mono_));
  x_threshold_ = hmax * (1.0 + 1e-9);
}

double SlowlyVaryingConjugate::solve(double x) const {
  auto h = [this](double y) { return y * phi_(y); };
  double lo = y_mono_;
  double hi = lo;
  int guard = 0;
  while (h(hi) < x) {
    hi *= bracket_growth_;
    if (++guard > 4000 || hi > 1e300) {
      throw Error("SlowlyVaryingConjugate: bracket expansion overflow");
    }
  }
  // h is increasing past y_mono_; bisect until y*phi(y) matches x to 1e-10.
  for (int it = 0; it < 500; ++it) {
    double mid = 0.5 * (lo + hi);
    double hm = h(mid);
    if (std::abs(hm - x) <= 1e-10 * x) return mid;
    if (hm < x) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * mid) return mid;
  }
  return 0.5 * (lo + hi);
}

double SlowlyVaryingConjugate::invert_xphix(double x) const {
  if (!(x > x_threshold_)) {
    throw BelowMonotoneThreshold(
        "conjugate query at x <= certified monotone threshold");
  }
  {
    std::shared_lock lock(mutex_);
    auto it = cache_.find(x);
    if (it != cache_.end()) return it->second;
  }
  double y = solve(x);
  {
    std::unique_lock lock(mutex_);
    cache_.emplace(x, y);
  }
  return y;
}

double SlowlyVaryingConjugate::operator()(double x) const {
  return invert_xphix(x) / x;
}

}  // namespace renewal0
