#include "doctest.h"
#include "scg/error.hpp"
#include "scg/fixtures.hpp"
#include "scg/tape.hpp"

using namespace scg;

namespace {

Tape tape_of(const Fixture& f, unsigned long long seed = 0) {
  Rng rng(seed);
  return record(f.graph, forward_sample(f.graph, f.inputs(), rng));
}

}  // namespace

TEST_SUITE("autodiff") {
  TEST_CASE("record reproduces node values") {
    const Fixture& f = fixture("FIG11B");
    const Tape t = tape_of(f);
    const std::vector<double> want{1, 2, 2, 4, 6, 24};
    for (NodeId v = 0; v < 6; ++v) CHECK(t.value(t.node_slot[static_cast<size_t>(v)]) == want[static_cast<size_t>(v)]);

    const Graph one = build_graph({decl::input("x")});
    const Tape t1 = record(one, Assignment{{3.0}, {std::nan("")}});
    CHECK(t1.size() == 1);
    CHECK(t1.rec(0).op == TOp::Leaf);

    const Fixture& c = fixture("CHAIN2");
    const Tape tc = tape_of(c, 5);
    for (const char* n : {"s0", "a0", "s1", "a1"}) CHECK(tc.logp_slot[static_cast<size_t>(c.id(n))] >= 0);
    for (const char* n : {"r0", "r1"}) CHECK(tc.logp_slot[static_cast<size_t>(c.id(n))] == -1);
  }

  TEST_CASE("replay is bit-identical to sampling on every fixture") {
    for (const Fixture& f : fixtures()) {
      Rng rng(3);
      for (int i = 0; i < 20; ++i) {
        const Assignment a = forward_sample(f.graph, f.inputs(), rng);
        const Tape t = record(f.graph, a);
        for (NodeId v = 0; v < static_cast<NodeId>(f.graph.size()); ++v) {
          CHECK(t.value(t.node_slot[static_cast<size_t>(v)]) == a[v]);
          if (a.has_logp(v)) CHECK(t.value(t.logp_slot[static_cast<size_t>(v)]) == a.logp[static_cast<size_t>(v)]);
        }
      }
    }
  }

  TEST_CASE("backward") {
    const Fixture& f = fixture("FIG11B");
    const Tape t = tape_of(f);
    CHECK(backward(t, f.id("l"))[f.id("x")] == 32.0);
    CHECK(backward(t, f.id("v4"))[f.id("v4")] == 1.0);
    const Fixture& a = fixture("FIG11A");
    CHECK(backward(tape_of(a), a.id("l"))[a.id("v")] == doctest::Approx(8.0).epsilon(1e-15));
  }

  TEST_CASE("backward with holds") {
    const Fixture& f = fixture("FIG11B");
    const Tape t = tape_of(f);
    CHECK(backward_with_holds(t, f.id("v4"), f.set({"v3"}))[f.id("x")] == 3.0);
    const GradMap plain = backward(t, f.id("l"));
    const GradMap none = backward_with_holds(t, f.id("l"), {});
    CHECK(plain.grads == none.grads);
    const GradMap all = backward_with_holds(t, f.id("l"), f.set({"v3", "v4"}));
    CHECK(all[f.id("x")] == 0.0);
    CHECK(all[f.id("v1")] == 0.0);
    CHECK(all[f.id("v4")] == 4.0);
  }

  TEST_CASE("horizon backprop: ordered versus naive") {
    const Fixture& f = fixture("FIG11B");
    const Tape t = tape_of(f);
    const NodeId x = f.id("x"), v3 = f.id("v3"), v4 = f.id("v4");
    const GradMap full = backward(t, f.id("l"));
    CHECK(full[v3] == 10.0);
    CHECK(full[v4] == 4.0);
    CHECK(horizon_backprop(t, x, {v3, v4}, {10.0, 4.0}) == 32.0);
    CHECK(horizon_backprop(t, x, {v4, v3}, {4.0, 10.0}) == 32.0);  // reordered internally
    CHECK(horizon_backprop(t, x, {v3, v4}, {10.0, 4.0}, true) == 40.0);
    CHECK(horizon_backprop(t, x, {f.id("v2"), v3}, {backward(t, f.id("l"))[f.id("v2")], 10.0}) == 32.0);
    // Single child chain base case.
    const Fixture& a = fixture("FIG11A");
    const Tape ta = tape_of(a);
    CHECK(horizon_backprop(ta, a.id("v1"), {a.id("l")}, {1.0}) == backward(ta, a.id("l"))[a.id("v1")]);
  }

  TEST_CASE("horizon backprop rejects non-separators") {
    const Fixture& f = fixture("FIG11B");
    const Tape t = tape_of(f);
    try {
      horizon_backprop(t, f.id("x"), {f.id("v3")}, {10.0});
      FAIL("expected NotSeparator");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NotSeparator);
    }
  }

  TEST_CASE("finite differences") {
    CHECK(finite_difference([](double x) { return x * x; }, 3.0, 1e-4) == doctest::Approx(6.0).epsilon(1e-6));
    CHECK(finite_difference([](double) { return 4.0; }, 3.0, 1e-4) == 0.0);
    const Fixture& f = fixture("FIG11B");
    CHECK(std::abs(finite_difference(f.graph, f.inputs(), f.id("x"), f.id("l"), 1e-4) - 32.0) <= 1e-5);
  }
}
