#include "slummap/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace slummap;

TEST_CASE("pcg32 matches the reference generator") {
    // pcg32-demo: pcg32_srandom_r(&rng, 42u, 54u)
    Pcg32 rng(42, 54);
    const std::uint32_t expected[] = {0xa15c02b7, 0x7b47f409, 0xba1d3330, 0x83d2f293, 0xbfa4784b, 0xcbed606e};
    for (auto e : expected) CHECK(rng.next() == e);
}

TEST_CASE("splitmix64 sub-streams") {
    // First SplitMix64 output for state 0.
    CHECK(derive_seed(0, 0) == 0xe220a8397b1dcdafULL);
    CHECK(derive_seed(0, 1) != derive_seed(0, 0));
    CHECK(derive_seed(1, 0) != derive_seed(0, 0));
}

TEST_CASE("bounded draws stay in range") {
    Pcg32 rng(3);
    for (std::uint32_t bound : {1u, 2u, 3u, 7u, 1000u, 0x80000001u}) {
        for (int i = 0; i < 200; ++i) CHECK(rng.below(bound) < bound);
    }
    CHECK(rng.below(0) == 0);
}

TEST_CASE("sample without replacement yields distinct indices") {
    Pcg32 rng(11);
    const auto picks = sample_without_replacement(50, 20, rng);
    CHECK(picks.size() == 20);
    std::set<std::size_t> unique(picks.begin(), picks.end());
    CHECK(unique.size() == 20);
    CHECK(*std::max_element(picks.begin(), picks.end()) < 50);

    Pcg32 again(11);
    CHECK(sample_without_replacement(50, 20, again) == picks);

    Pcg32 full(5);
    auto perm = sample_without_replacement(10, 10, full);
    std::sort(perm.begin(), perm.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(perm[i] == i);

    CHECK_THROWS_AS(sample_without_replacement(3, 4, full), std::invalid_argument);
}
