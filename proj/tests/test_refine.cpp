#include "doctest.h"
#include "piq/refine.hpp"

using namespace piq;

namespace {

const char* kRuin = R"(#var x y z
#int x y
#pre x*y - x^2
#post z
#hint x <= 0 => x = 0
#hint y <= x => x = y
z := 0;
while (0 < x < y) {
  {x := x + 1} [0.5] {x := x - 1};
  z := z + 1
}
)";

Polynomial poly(const std::string& text, const std::vector<std::string>& vars) {
  return to_polynomial(*parse_expr(text, vars), vars.size());
}

}  // namespace

TEST_CASE("ruin synthesis") {
  Program p = parse(kRuin);
  auto r = synthesize(p);
  REQUIRE(r.status == Verdict::Verified);
  CHECK(*r.invariant == poly("z + x*y - x^2", p.vars));
  CHECK(r.degree == 2);
  CHECK(r.template_coefficients == 10);
  REQUIRE(!r.history.empty());
  CHECK(r.history.front().action == "solve");
}
