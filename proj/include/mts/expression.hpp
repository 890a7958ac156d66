#pragma once

#include "mts/common.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace mts {

enum class Variable { x, y, t };

// Arithmetic over x, y, t and pi: + - * / ^, unary minus, parentheses and the
// functions sin cos sinh cosh exp log sqrt.
class Expression {
 public:
  struct Node;

  Expression();  // the constant 0
  explicit Expression(double value);

  static Expression parse(std::string_view text);

  double evaluate(double x, double y, double t) const;
  double operator()(const Point& p, double t) const { return evaluate(p[0], p[1], t); }

  Expression derivative(Variable v) const;
  bool depends_on(Variable v) const;
  bool is_constant() const;
  std::string to_string() const;

 private:
  explicit Expression(std::shared_ptr<const Node> root);
  std::shared_ptr<const Node> root_;
};

}  // namespace mts
