#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rewa/metrics.hpp"
#include "rewa/rng.hpp"

using namespace rewa;
using namespace rewa::metrics;

TEST_CASE("sparsity_profile examples") {
  const auto p = sparsity_profile(DenseVector({0.0, 1e-6, 1.0}), {1e-7, 1e-5});
  REQUIRE(p.counts.size() == 2);
  CHECK(p.counts[0] == 1);
  CHECK(p.counts[1] == 2);

  const auto z = sparsity_profile(DenseVector::zeros(4), {1e-7, 1e-5});
  CHECK(z.counts[0] == 4);
  CHECK(z.counts[1] == 4);

  CHECK_THROWS_AS(sparsity_profile(DenseVector({1.0}), {1e-5, 1e-7}),
                  UnsortedThresholds);
  CHECK_THROWS_AS(sparsity_profile(DenseVector({1.0}), {-1e-7}),
                  UnsortedThresholds);
}

TEST_CASE("sparsity_profile invariant under negation and permutation") {
  Pcg32 rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> x(6);
    for (auto& v : x) {
      v = (rng.next_u32() % 3 == 0) ? 0.0 : -1.0 + 2.0 * rng.next_double();
    }
    std::vector<double> neg;
    for (double v : x) {
      neg.push_back(-v);
    }
    std::vector<double> rot(x.rbegin(), x.rend());
    const std::vector<double> taus = {1e-6, 1e-3, 0.5};
    CHECK(sparsity_profile(DenseVector(x), taus).counts ==
          sparsity_profile(DenseVector(neg), taus).counts);
    CHECK(sparsity_profile(DenseVector(x), taus).counts ==
          sparsity_profile(DenseVector(rot), taus).counts);
  }
}

TEST_CASE("compression_ratio examples") {
  std::vector<double> x(100, 1.0);
  for (int i = 1; i < 100; ++i) {
    x[i] = 1e-9;
  }
  CHECK(compression_ratio(DenseVector(x), 1e-6) == Catch::Approx(100.0));
  CHECK(compression_ratio(DenseVector(std::vector<double>(10, 1.0)), 1e-6) ==
        Catch::Approx(1.0));
  CHECK(std::isinf(compression_ratio(DenseVector::zeros(5), 0.0)));
}

TEST_CASE("compression_ratio nondecreasing in tau") {
  Pcg32 rng(9);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> x(8);
    for (auto& v : x) {
      v = -2.0 + 4.0 * rng.next_double();
    }
    const DenseVector xv(x);
    const double t1 = rng.next_double();
    const double t2 = t1 + rng.next_double();
    CHECK(compression_ratio(xv, t1) <= compression_ratio(xv, t2));
  }
}

TEST_CASE("support_recovery examples") {
  const DenseVector star({0.0, 2.0, 0.0, -1.0});
  {
    const auto r = support_recovery(star, star, 0.5);
    CHECK(r.exact);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
  }
  {
    const auto r = support_recovery(DenseVector::zeros(4), star, 0.1);
    CHECK(!r.exact);
    CHECK(r.recall == 0.0);
  }
  {
    const DenseVector dense({1.0, 1.0, 1.0, 1.0});
    const auto r = support_recovery(dense, DenseVector({1.0, 0.0, 0.0, 0.0}), 0.5);
    CHECK(r.precision == Catch::Approx(0.25));
    CHECK(r.recall == 1.0);
  }
  CHECK_THROWS_AS(support_recovery(DenseVector({1.0}), DenseVector({1.0, 2.0}), 0.1),
                  DimensionMismatch);
}
