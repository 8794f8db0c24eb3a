#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace looprec {

// Shared error type: every precondition failure in the library throws this with a
// short machine-readable code followed by ": <detail>".
class calc_error : public std::runtime_error {
public:
    calc_error(const std::string& code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(code) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// Every scalar ring R in this library provides:
//   R(long), R(const R&), +, -, *, /, ==, unary -,
//   bool is_zero() const, std::string str() const,
//   std::optional<R> try_sqrt() const  (empty when no square root exists in R).
// Generic helpers below rely only on that interface.

template <class R>
R ring_pow(R base, long e) {
    if (e < 0) return R(1) / ring_pow(base, -e);
    R acc(1);
    while (e > 0) {
        if (e & 1) acc = acc * base;
        base = base * base;
        e >>= 1;
    }
    return acc;
}

} // namespace looprec
