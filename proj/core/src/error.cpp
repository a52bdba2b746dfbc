#include "innoprod/error.hpp"

#include <utility>

namespace innoprod {

ValidationError::ValidationError(const std::string& what, std::vector<std::string> offenders)
    : Error(what), offenders_(std::move(offenders)) {}

CollinearityError::CollinearityError(const std::string& what, std::vector<std::string> dropped)
    : Error(what), dropped_(std::move(dropped)) {}

ConvergenceError::ConvergenceError(const std::string& what, double objective, int iterations)
    : Error(what), objective_(objective), iterations_(iterations) {}

}  // namespace innoprod
