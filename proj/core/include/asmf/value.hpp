#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace asmf {

// Runtime value of a term: undef, a boolean, a bounded integer, or a symbolic
// constant (enum element or agent constant). Values are totally ordered so
// they can key ordered maps; the order (undef < bool < int < sym) is also the
// order used when serializing states.
class Value {
 public:
  enum class Kind { Undef, Bool, Int, Sym };

  Value() = default;
  static Value undef() { return Value(); }
  static Value boolean(bool b) {
    Value v;
    v._kind = Kind::Bool;
    v._b = b;
    return v;
  }
  static Value integer(int64_t i) {
    Value v;
    v._kind = Kind::Int;
    v._i = i;
    return v;
  }
  static Value symbol(std::string s) {
    Value v;
    v._kind = Kind::Sym;
    v._s = std::move(s);
    return v;
  }

  Kind kind() const { return _kind; }
  bool is_undef() const { return _kind == Kind::Undef; }
  bool as_bool() const { return _b; }
  int64_t as_int() const { return _i; }
  const std::string& as_sym() const { return _s; }

  bool operator==(const Value& o) const {
    if (_kind != o._kind) return false;
    switch (_kind) {
      case Kind::Undef: return true;
      case Kind::Bool: return _b == o._b;
      case Kind::Int: return _i == o._i;
      case Kind::Sym: return _s == o._s;
    }
    return false;
  }
  bool operator!=(const Value& o) const { return !(*this == o); }
  bool operator<(const Value& o) const {
    if (_kind != o._kind) return _kind < o._kind;
    switch (_kind) {
      case Kind::Undef: return false;
      case Kind::Bool: return _b < o._b;
      case Kind::Int: return _i < o._i;
      case Kind::Sym: return _s < o._s;
    }
    return false;
  }

  std::string str() const;

 private:
  Kind _kind = Kind::Undef;
  bool _b = false;
  int64_t _i = 0;
  std::string _s;
};

// A location is a function name plus concrete argument values; the unit of
// state. Ordered lexicographically by (name, args) which matches the sort
// order of its printed form.
struct Location {
  std::string fn;
  std::vector<Value> args;

  bool operator==(const Location& o) const { return fn == o.fn && args == o.args; }
  bool operator<(const Location& o) const {
    if (fn != o.fn) return fn < o.fn;
    return args < o.args;
  }

  std::string str() const;
};

} // namespace asmf
