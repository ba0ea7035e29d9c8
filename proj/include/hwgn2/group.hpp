#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string_view>

#include "hwgn2/prg.hpp"

namespace hwgn2::ot {

using Element = std::array<std::uint8_t, 32>;
using Scalar = std::array<std::uint8_t, 32>;

/// Prime-order group written multiplicatively.
class Group {
 public:
  virtual ~Group() = default;
  virtual std::string_view name() const = 0;
  virtual Scalar random_scalar(Prg& prg) const = 0;
  virtual Element generator_pow(const Scalar& s) const = 0;
  virtual Element pow(const Element& x, const Scalar& s) const = 0;
  virtual Element mul(const Element& x, const Element& y) const = 0;
  virtual Element div(const Element& x, const Element& y) const = 0;
  /// Throws hwgn2::Error unless x encodes a non-identity subgroup element.
  virtual void check(const Element& x) const = 0;
};

enum class Profile : std::uint8_t { Test, Secure };

std::string_view to_string(Profile p);
Profile profile_from_string(std::string_view s);

/// HWGN2_PROFILE={test,secure}; unset means secure.
Profile profile_from_env();

/// Test: order-q subgroup of Z_p* for the 62-bit safe prime p = 2q + 1.
/// Fast and insecure. Secure: ristretto255.
const Group& group_for(Profile p);

/// The test group is only allowed where no real peer is involved. Throws for
/// networked sessions.
void require_allowed(Profile p, bool networked);

}  // namespace hwgn2::ot
