#ifndef KOBLAB_EXPRESSION_HPP
#define KOBLAB_EXPRESSION_HPP

#include <memory>
#include <string>
#include <vector>

#include "koblab/linalg.hpp"

namespace koblab {

// Arithmetic expressions over variables x1..xn with +, -, *, /, ^ and the
// functions exp, log, sin, cos, sinh, cosh. Supports evaluation and symbolic
// differentiation, which is how expression metrics get first derivatives.
class Expr {
  public:
    static Expr parse(const std::string& text, int nvars);
    static Expr constant(double c);

    double eval(const Vec& x) const;
    Expr derivative(int var) const;
    std::string str() const;
    bool is_zero() const;

    struct Node;

  private:
    std::shared_ptr<const Node> root_;
    int nvars_ = 0;
    explicit Expr(std::shared_ptr<const Node> root, int nvars)
        : root_(std::move(root)), nvars_(nvars) {}
};

} // namespace koblab

#endif
