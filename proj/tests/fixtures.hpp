#pragma once

// Shared fixtures: the introduction's buyer/seller types and other recurring
// terms. Ground types without a sort in the grammar (string, date, char) are
// encoded as mutually incomparable single-label selections, which preserves
// every (non-)subtyping fact the fixtures exercise.

#include <string>

#include "sesst/type.hpp"

namespace fixtures {

inline const std::string kStr = "str!<end>.end";
inline const std::string kDate = "date!<end>.end";
inline const std::string kChar = "chr!<end>.end";

// (1) !<string>.?(int).{!ok<string>.?(date).end (+) !quit.end}
inline sesst::TypeRef type1() {
  return sesst::parse_type("m!<" + kStr + ">.r?(int).+{ ok!<" + kStr + ">.d?(" + kDate +
                           ").end, quit!<end>.end }");
}

// (2) = dual of (1)
inline sesst::TypeRef type2() {
  return sesst::parse_type("m?(" + kStr + ").r!<int>.&{ ok?(" + kStr + ").d!<" + kDate +
                           ">.end, quit?(end).end }");
}

// (3) keeps only the ok branch of (1)
inline sesst::TypeRef type3() {
  return sesst::parse_type("m!<" + kStr + ">.r?(int).ok!<" + kStr + ">.d?(" + kDate + ").end");
}

// (4) offers one branch more than (2)
inline sesst::TypeRef type4() {
  return sesst::parse_type("m?(" + kStr + ").r!<int>.&{ ok?(" + kStr + ").d!<" + kDate +
                           ">.end, quit?(end).end, later?(end).end }");
}

// T_a = !<int>.!<char>.?(string).?(nat).end and the permuted supertype
inline sesst::TypeRef intro_ta() {
  return sesst::parse_type("i1!<int>.i2!<" + kChar + ">.i3?(" + kStr + ").i4?(nat).end");
}
inline sesst::TypeRef intro_ta_permuted() {
  return sesst::parse_type("i3?(" + kStr + ").i4?(nat).i1!<int>.i2!<" + kChar + ">.end");
}

// Mostrous thesis pair: unsound under orphan-message errors
inline sesst::TypeRef mostrous_t() { return sesst::parse_type("rec t. l!<end>.t"); }
inline sesst::TypeRef mostrous_s() { return sesst::parse_type("rec t. l!<end>.l2?(end).t"); }

// Example "n-bra-async needs a smaller type" (5.9-style)
inline sesst::TypeRef ex59_t() {
  return sesst::parse_type("rec t. +{ l1!<end>.t, l2!<end>.l3?(end).end }");
}
inline sesst::TypeRef ex59_s() {
  return sesst::parse_type("l3?(end).rec t. +{ l1!<end>.t, l2!<end>.end }");
}
inline sesst::TypeRef ex59_t_adjusted() { return sesst::parse_type("rec t. l1!<end>.t"); }

// Example "n-sel-async needs a smaller type" (5.10-style)
inline sesst::TypeRef ex510_t() {
  return sesst::parse_type("rec t. l1!<end>.&{ l2?(end).t, l3?(end).t }");
}
inline sesst::TypeRef ex510_s() {
  return sesst::parse_type("rec t. &{ l2?(end).t, l3?(end).l1!<end>.t }");
}

}  // namespace fixtures
