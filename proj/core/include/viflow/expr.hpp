#pragma once

#include <memory>
#include <string>

#include "viflow/patch.hpp"

namespace viflow {

/// Arithmetic expression over x and y: operators + - * / ^, functions
/// sin cos exp sqrt abs, constants pi and e. Parsed once, evaluated many
/// times; keeps its source text for serialization.
class Expr {
 public:
  Expr() = default;
  static Expr parse(const std::string& src);

  double operator()(double x, double y) const;
  double operator()(const Vec2& p) const { return (*this)(p.x(), p.y()); }
  bool valid() const { return static_cast<bool>(node_); }
  const std::string& source() const { return src_; }

  ScalarField field() const;

  struct Node;

 private:
  std::shared_ptr<const Node> node_;
  std::string src_;
};

}  // namespace viflow
