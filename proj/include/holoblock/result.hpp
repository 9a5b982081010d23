#pragma once

#include <cassert>
#include <utility>
#include <variant>

namespace holoblock {

// Minimal expected-or-error carrier.  We target gcc 11 where std::expected
// is not available yet; this covers the subset the library needs.
template <typename T, typename E>
class Result {
public:
    Result(T value) : v_(std::in_place_index<0>, std::move(value)) {}
    Result(E error) : v_(std::in_place_index<1>, std::move(error)) {}

    bool ok() const { return v_.index() == 0; }
    explicit operator bool() const { return ok(); }

    T& value() { assert(ok()); return std::get<0>(v_); }
    const T& value() const { assert(ok()); return std::get<0>(v_); }
    E& error() { assert(!ok()); return std::get<1>(v_); }
    const E& error() const { assert(!ok()); return std::get<1>(v_); }

    T value_or(T fallback) const { return ok() ? std::get<0>(v_) : std::move(fallback); }

private:
    std::variant<T, E> v_;
};

// Success type for operations that return no payload.
struct Ok {};

} // namespace holoblock
