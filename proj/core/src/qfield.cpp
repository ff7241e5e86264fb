#include "ringmod/qfield.hpp"

#include <sstream>

namespace ringmod {

QField::QField(Fn fn, std::string description, std::vector<Point> singular_points, bool integrable)
    : fn_(std::make_shared<const Fn>(std::move(fn))),
      description_(std::move(description)),
      singular_(std::move(singular_points)),
      integrable_(integrable) {}

QField QField::constant(double c) {
  std::ostringstream os;
  os.precision(17);
  os << c;
  QField q([c](std::span<const double>) { return c; }, os.str());
  q.constant_ = true;
  q.constant_value_ = c;
  return q;
}

QField QField::expression(const Expression& expr, std::vector<Point> singular_points, bool integrable) {
  return QField([expr](std::span<const double> p) { return expr.evaluate(p); }, expr.text(), std::move(singular_points),
                integrable);
}

QField QField::scaled(double s) const {
  std::ostringstream os;
  os.precision(17);
  os << s << "*(" << description_ << ')';
  QField q([fn = fn_, s](std::span<const double> p) { return s * (*fn)(p); }, os.str(), singular_, integrable_);
  q.constant_ = constant_;
  q.constant_value_ = s * constant_value_;
  return q;
}

}  // namespace ringmod
