#pragma once

#include <cassert>
#include <utility>
#include <variant>

namespace perfedit {

/// Minimal ok-or-error holder for operations whose failure is an expected
/// outcome rather than a caller bug (measurements, compiles, extraction).
/// Caller bugs (violated preconditions, unit mixing) throw instead.
template <typename T, typename E>
class Result {
 public:
  Result(T value) : storage_(std::in_place_index<0>, std::move(value)) {}
  Result(E error) : storage_(std::in_place_index<1>, std::move(error)) {}

  bool ok() const { return storage_.index() == 0; }
  explicit operator bool() const { return ok(); }

  const T& value() const& {
    assert(ok());
    return std::get<0>(storage_);
  }
  T& value() & {
    assert(ok());
    return std::get<0>(storage_);
  }
  T&& value() && {
    assert(ok());
    return std::get<0>(std::move(storage_));
  }

  const E& error() const& {
    assert(!ok());
    return std::get<1>(storage_);
  }
  E& error() & {
    assert(!ok());
    return std::get<1>(storage_);
  }

 private:
  std::variant<T, E> storage_;
};

}  // namespace perfedit
