#pragma once

// Text descriptors for models, potentials and regions, e.g.
//   sphere(2, radius=1)
//   truncated(power(center=[0,0,0], a=1, cutoff=1), ball(center=[0,0,0], r=1))
// Parsing the output of describe() gives back an equal object.

#include <cctype>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "katodyn/error.hpp"
#include "katodyn/geometry.hpp"
#include "katodyn/potentials.hpp"

namespace katodyn {

class DescriptorError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct Expr {
  enum class Kind { Number, Ident, List, Call } kind = Kind::Number;
  double number = 0.0;
  std::string name;                 // identifier or call name
  std::vector<Expr> items;          // list items / positional args
  std::map<std::string, Expr> kw;   // keyword args
};

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string s) : s_(std::move(s)) {}

  Expr parse() {
    Expr e = value();
    skip();
    if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& m) const {
    throw DescriptorError("descriptor '" + s_ + "' at column " + std::to_string(i_ + 1) + ": " + m);
  }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }
  std::string ident() {
    skip();
    const std::size_t b = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
    return s_.substr(b, i_ - b);
  }

  Expr value() {
    skip();
    if (i_ >= s_.size()) fail("unexpected end");
    Expr e;
    const char c = s_[i_];
    if (c == '[') {
      ++i_;
      e.kind = Expr::Kind::List;
      if (!eat(']')) {
        do e.items.push_back(value());
        while (eat(','));
        expect(']');
      }
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      const char* b = s_.c_str() + i_;
      char* end = nullptr;
      e.number = std::strtod(b, &end);
      if (end == b) fail("bad number");
      i_ += static_cast<std::size_t>(end - b);
      return e;
    }
    const std::string id = ident();
    if (id.empty()) fail("expected a value");
    if (id == "inf" || id == "infinity") {
      e.number = kInf;
      return e;
    }
    e.name = id;
    if (!eat('(')) {
      e.kind = Expr::Kind::Ident;
      return e;
    }
    e.kind = Expr::Kind::Call;
    if (eat(')')) return e;
    do {
      skip();
      const std::size_t save = i_;
      const std::string key = ident();
      if (!key.empty() && eat('=')) {
        if (e.kw.count(key)) fail("duplicate argument '" + key + "'");
        e.kw[key] = value();
      } else {
        i_ = save;
        if (!e.kw.empty()) fail("positional argument after keyword argument");
        e.items.push_back(value());
      }
    } while (eat(','));
    expect(')');
    return e;
  }

  std::string s_;
  std::size_t i_ = 0;
};

inline double as_number(const Expr& e, const std::string& what) {
  if (e.kind != Expr::Kind::Number) throw DescriptorError(what + " must be a number");
  return e.number;
}

inline std::vector<double> as_numbers(const Expr& e, const std::string& what) {
  if (e.kind == Expr::Kind::Number) return {e.number};
  if (e.kind != Expr::Kind::List) throw DescriptorError(what + " must be a list of numbers");
  std::vector<double> v;
  for (const auto& it : e.items) v.push_back(as_number(it, what));
  return v;
}

// Keyword `key`, else positional argument `pos`.
inline const Expr* arg(const Expr& call, const std::string& key, std::size_t pos) {
  auto it = call.kw.find(key);
  if (it != call.kw.end()) return &it->second;
  if (pos < call.items.size()) return &call.items[pos];
  return nullptr;
}

inline const Expr& need(const Expr& call, const std::string& key, std::size_t pos) {
  const Expr* e = arg(call, key, pos);
  if (!e) throw DescriptorError(call.name + ": missing argument '" + key + "'");
  return *e;
}

inline void only(const Expr& call, std::initializer_list<const char*> keys, std::size_t max_pos) {
  for (const auto& [k, v] : call.kw) {
    bool ok = false;
    for (const char* a : keys) ok = ok || k == a;
    if (!ok) throw DescriptorError(call.name + ": unknown argument '" + k + "'");
  }
  if (call.items.size() > max_pos) throw DescriptorError(call.name + ": too many arguments");
}

}  // namespace detail

inline Expr parse_expr(const std::string& s) { return detail::ExprParser(s).parse(); }

inline ManifoldModel model_from_expr(const Expr& e) {
  using namespace detail;
  if (e.kind != Expr::Kind::Call) throw DescriptorError("model descriptor must be a call like euclidean(2)");
  try {
    if (e.name == "euclidean") {
      only(e, {"dim"}, 1);
      return ManifoldModel::euclidean(static_cast<int>(as_number(need(e, "dim", 0), "dim")));
    }
    if (e.name == "torus") {
      std::vector<double> p;
      if (auto it = e.kw.find("periods"); it != e.kw.end()) p = as_numbers(it->second, "periods");
      for (const auto& x : e.items) {
        auto v = as_numbers(x, "periods");
        p.insert(p.end(), v.begin(), v.end());
      }
      only(e, {"periods"}, 8);
      return ManifoldModel::torus(p);
    }
    if (e.name == "sphere") {
      only(e, {"dim", "radius"}, 2);
      const Expr* r = arg(e, "radius", 1);
      return ManifoldModel::sphere(static_cast<int>(as_number(need(e, "dim", 0), "dim")),
                                   r ? as_number(*r, "radius") : 1.0);
    }
    if (e.name == "hyperbolic") {
      only(e, {"dim", "kappa"}, 2);
      const Expr* k = arg(e, "kappa", 1);
      return ManifoldModel::hyperbolic(static_cast<int>(as_number(need(e, "dim", 0), "dim")),
                                       k ? as_number(*k, "kappa") : 1.0);
    }
    if (e.name == "conformal_circle") {
      only(e, {"cos", "sin", "mesh"}, 3);
      const Expr* c = arg(e, "cos", 0);
      const Expr* s = arg(e, "sin", 1);
      const Expr* m = arg(e, "mesh", 2);
      return ManifoldModel::conformal_circle(c ? as_numbers(*c, "cos") : std::vector<double>{},
                                             s ? as_numbers(*s, "sin") : std::vector<double>{},
                                             m ? static_cast<int>(as_number(*m, "mesh")) : 256);
    }
  } catch (const DescriptorError&) {
    throw;
  } catch (const Error& err) {
    throw DescriptorError(e.name + ": " + err.what());
  }
  throw DescriptorError("unknown model '" + e.name + "'");
}

inline ManifoldModel parse_model(const std::string& s) { return model_from_expr(parse_expr(s)); }

inline Point point_from_expr(const ManifoldModel& g, const Expr& e) {
  try {
    return make_point(g, detail::as_numbers(e, "point"));
  } catch (const DescriptorError&) {
    throw;
  } catch (const Error& err) {
    throw DescriptorError(err.what());
  }
}

inline Region region_from_expr(const ManifoldModel& g, const Expr& e) {
  using namespace detail;
  if (e.kind == Expr::Kind::Ident && e.name == "whole") return Region::whole();
  if (e.kind == Expr::Kind::Call && e.name == "ball") {
    only(e, {"center", "r"}, 2);
    const double r = as_number(need(e, "r", 1), "r");
    if (!(r >= 0)) throw DescriptorError("ball: radius must be nonnegative");
    return Region::ball(point_from_expr(g, need(e, "center", 0)), r);
  }
  if (e.kind == Expr::Kind::Call && e.name == "union") {
    std::vector<Ball> balls;
    for (const auto& it : e.items) {
      const Region r = region_from_expr(g, it);
      if (r.is_whole()) return r;
      balls.insert(balls.end(), r.balls().begin(), r.balls().end());
    }
    if (balls.empty()) throw DescriptorError("union: needs at least one ball");
    return Region::union_of(balls);
  }
  throw DescriptorError("region must be whole, ball(...) or union(...)");
}

inline Region parse_region(const ManifoldModel& g, const std::string& s) { return region_from_expr(g, parse_expr(s)); }

inline Potential potential_from_expr(const ManifoldModel& g, const Expr& e) {
  using namespace detail;
  if (e.kind != Expr::Kind::Call) throw DescriptorError("potential descriptor must be a call like constant(1)");
  const std::string& n = e.name;
  try {
    auto center = [&](std::size_t pos) {
      const Expr* c = arg(e, "center", pos);
      return c ? point_from_expr(g, *c) : origin(g);
    };
    auto num = [&](const char* key, std::size_t pos, double def) {
      const Expr* c = arg(e, key, pos);
      return c ? as_number(*c, key) : def;
    };
    if (n == "constant") {
      only(e, {"c"}, 1);
      return Potential::constant(as_number(need(e, "c", 0), "c"));
    }
    if (n == "power") {
      only(e, {"center", "a", "cutoff"}, 3);
      return Potential::power(center(0), as_number(need(e, "a", 1), "a"), num("cutoff", 2, kInf));
    }
    if (n == "log") {
      only(e, {"center", "cutoff"}, 2);
      return Potential::log_singularity(center(0), num("cutoff", 1, 1.0));
    }
    if (n == "bump") {
      only(e, {"center", "radius", "height"}, 3);
      return Potential::bump(center(0), num("radius", 1, 1.0), num("height", 2, 1.0));
    }
    if (n == "grid") {
      only(e, {"layout", "period", "lo", "hi", "center", "extent", "values"}, 0);
      const Expr& lay = need(e, "layout", 99);
      if (lay.kind != Expr::Kind::Ident) throw DescriptorError("grid: layout must be periodic, interval or radial");
      auto vals = as_numbers(need(e, "values", 99), "values");
      if (lay.name == "periodic") return Potential::grid_periodic(as_number(need(e, "period", 99), "period"), vals);
      if (lay.name == "interval")
        return Potential::grid_interval(as_number(need(e, "lo", 99), "lo"), as_number(need(e, "hi", 99), "hi"), vals);
      if (lay.name == "radial")
        return Potential::grid_radial(point_from_expr(g, need(e, "center", 99)),
                                      as_number(need(e, "extent", 99), "extent"), vals);
      throw DescriptorError("grid: unknown layout '" + lay.name + "'");
    }
    if (n == "trig") {
      only(e, {"period", "cos", "sin", "n"}, 0);
      const Expr* c = arg(e, "cos", 99);
      const Expr* s = arg(e, "sin", 99);
      return Potential::trig(num("period", 99, g.is_circle() ? g.chart_period() : 2.0 * kPi),
                             c ? as_numbers(*c, "cos") : std::vector<double>{},
                             s ? as_numbers(*s, "sin") : std::vector<double>{},
                             static_cast<int>(num("n", 99, 1024)));
    }
    if (n == "truncated") {
      only(e, {"region"}, 2);
      if (e.items.empty()) throw DescriptorError("truncated: missing potential");
      return Potential::truncated(potential_from_expr(g, e.items[0]), region_from_expr(g, need(e, "region", 1)));
    }
    if (n == "sum") {
      only(e, {}, 1 << 20);
      std::vector<Potential> ts;
      for (const auto& it : e.items) ts.push_back(potential_from_expr(g, it));
      return Potential::sum(ts);
    }
    if (n == "scaled") {
      only(e, {}, 2);
      if (e.items.size() != 2) throw DescriptorError("scaled: expects (k, potential)");
      return Potential::scaled(as_number(e.items[0], "k"), potential_from_expr(g, e.items[1]));
    }
    if (n == "positive" || n == "negative") {
      only(e, {}, 1);
      if (e.items.size() != 1) throw DescriptorError(n + ": expects one potential");
      const Potential in = potential_from_expr(g, e.items[0]);
      return n == "positive" ? Potential::positive_part(in) : Potential::negative_part(in);
    }
  } catch (const DescriptorError&) {
    throw;
  } catch (const Error& err) {
    throw DescriptorError(n + ": " + err.what());
  }
  throw DescriptorError("unknown potential '" + n + "'");
}

inline Potential parse_potential(const ManifoldModel& g, const std::string& s) {
  return potential_from_expr(g, parse_expr(s));
}

}  // namespace katodyn
