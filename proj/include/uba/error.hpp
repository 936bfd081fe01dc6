// SPDX-License-Identifier: Apache-2.0

#ifndef UBA_ERROR_HPP
#define UBA_ERROR_HPP

#include <stdexcept>
#include <string>

namespace uba
{

// Raised when a schedule, problem or model violates its invariants.
class InvalidSpec : public std::invalid_argument
{
public:
  explicit InvalidSpec(const std::string &what) : std::invalid_argument(what) {}
};

// Raised when an iteration index falls outside the schedule it is evaluated on.
class OutOfRange : public std::out_of_range
{
public:
  explicit OutOfRange(const std::string &what) : std::out_of_range(what) {}
};

}  // namespace uba

#endif  // UBA_ERROR_HPP
