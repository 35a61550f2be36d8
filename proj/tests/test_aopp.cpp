#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "snsqkd/aopp.hpp"
#include "snsqkd/chernoff.hpp"

using namespace snsqkd;

namespace {

RawKeyPair make_pair_strings(const std::vector<int>& alice, const std::vector<int>& bob) {
    RawKeyPair raw;
    for (int b : alice) raw.alice_bits.push_back(static_cast<std::uint8_t>(b));
    for (int b : bob) raw.bob_bits.push_back(static_cast<std::uint8_t>(b));
    return raw;
}

}  // namespace

TEST_CASE("identical balanced strings survive completely and error-free") {
    RawKeyPair raw;
    for (int i = 0; i < 2000; ++i) {
        const int bit = i % 2;
        raw.alice_bits.push_back(bit);
        raw.bob_bits.push_back(bit);
    }
    const AoppOutcome out = aopp_pair(raw, 123);
    CHECK(out.n_g == 1000);
    CHECK(out.n_t_prime() == out.n_g); // Alice's parity is odd for every pair
    CHECK(out.survived_error_rate == 0.0);
    CHECK(out.n_errors == 0);
    CHECK(out.n_odd <= 1000);
}

TEST_CASE("degenerate strings cannot be paired") {
    CHECK_THROWS_AS(aopp_pair(make_pair_strings({1, 1}, {1, 1}), 1), std::invalid_argument);
    CHECK_THROWS_AS(aopp_pair(make_pair_strings({0, 0}, {0, 0}), 1), std::invalid_argument);
    CHECK_THROWS_AS(aopp_pair(make_pair_strings({1}, {1}), 1), std::invalid_argument);
    RawKeyPair uneven;
    uneven.alice_bits = {0, 1};
    uneven.bob_bits = {0};
    CHECK_THROWS_AS(aopp_pair(uneven, 1), std::invalid_argument);
}

TEST_CASE("exhaustive 8-bit check against the pairing rule") {
    // for every Bob string with both symbols and a spread of Alice strings,
    // recompute the survival set from the returned matching by brute force
    for (int bob_word = 1; bob_word < 255; ++bob_word) {
        for (int alice_word : {0, 255, 0x5a, 0xc3, bob_word, ~bob_word & 0xff}) {
            RawKeyPair raw;
            for (int i = 0; i < 8; ++i) {
                raw.alice_bits.push_back((alice_word >> i) & 1);
                raw.bob_bits.push_back((bob_word >> i) & 1);
            }
            const AoppOutcome out = aopp_pair(raw, 77);

            int ones = 0, zeros = 0;
            for (int i = 0; i < 8; ++i) (raw.bob_bits[i] ? ones : zeros)++;
            REQUIRE(out.n_g == static_cast<std::uint64_t>(std::min(ones, zeros)));
            REQUIRE(out.pairs.size() == out.n_g);

            std::set<std::uint32_t> used;
            std::size_t survivors = 0, errors = 0;
            for (const auto& [i1, i0] : out.pairs) {
                CHECK(raw.bob_bits[i1] == 1);
                CHECK(raw.bob_bits[i0] == 0);
                CHECK(used.insert(i1).second);
                CHECK(used.insert(i0).second);
                if ((raw.alice_bits[i1] ^ raw.alice_bits[i0]) == 1) {
                    ++survivors;
                    if (raw.alice_bits[i1] != raw.bob_bits[i1]) ++errors;
                }
            }
            CHECK(survivors == out.n_t_prime());
            CHECK(errors == out.n_errors);
        }
    }
}

TEST_CASE("parity soundness on random strings") {
    std::mt19937_64 gen(5);
    RawKeyPair raw;
    for (int i = 0; i < 50000; ++i) {
        raw.alice_bits.push_back(gen() & 1);
        raw.bob_bits.push_back((gen() % 10) < 4 ? 1 : 0);
    }
    const AoppOutcome out = aopp_pair(raw, 9);
    for (const auto& [i1, i0] : out.pairs) {
        CHECK((raw.bob_bits[i1] ^ raw.bob_bits[i0]) == 1); // Bob-side odd by construction
    }
    CHECK(out.n_t_prime() <= out.n_g);
    CHECK(out.n_g <= raw.size() / 2);
}

TEST_CASE("error suppression matches the pair-outcome enumeration") {
    std::mt19937_64 gen(31337);
    for (const double e : {0.05, 0.10, 0.25}) {
        RawKeyPair raw;
        const int n = 400000;
        std::bernoulli_distribution bob_bit(0.5), flip(e);
        for (int i = 0; i < n; ++i) {
            const int b = bob_bit(gen) ? 1 : 0;
            const int a = flip(gen) ? (1 - b) : b;
            raw.bob_bits.push_back(b);
            raw.alice_bits.push_back(a);
        }
        const AoppOutcome out = aopp_pair(raw, 21);
        // enumeration of pair outcomes under independent symmetric errors:
        // survive on (correct,correct) or (wrong,wrong); only the latter errs
        const double p_surv = (1.0 - e) * (1.0 - e) + e * e;
        const double e_prime = e * e / p_surv;
        const double sigma_rate =
            std::sqrt(e_prime * (1.0 - e_prime) / static_cast<double>(out.n_t_prime()));
        CHECK(std::abs(out.survived_error_rate - e_prime) < 4.0 * sigma_rate + 1e-4);
        const double sigma_surv = std::sqrt(out.n_g * p_surv * (1.0 - p_surv));
        CHECK(std::abs(static_cast<double>(out.n_t_prime()) - out.n_g * p_surv) <
              4.0 * sigma_surv + 1.0);
    }
}

TEST_CASE("finite-key chain: error-free limit leaves only the pairing correction") {
    SecurityParams sec;
    const AoppFiniteKeyResult res =
        aopp_finite_key(1.0e6, 5.0e5, 5.0e5, 0.0, 2.5e6, 9.0e5, 6.0e5, sec);
    REQUIRE(!res.insufficient);
    CHECK(res.e1ph_prime == doctest::Approx(res.diag.r / res.n1_prime).epsilon(1e-12));
}

TEST_CASE("finite-key chain: infinite-key limit") {
    SecurityParams sec;
    sec.eps_chernoff = 1.0; // identity phi
    sec.eps_rk = 0.999999;  // r ~ ln(3k^2), negligible against n
    const double n1 = 1.0e9, n_t = 2.5e9;
    const double n_g = 4.0e8, n_odd = 3.0e8;
    const double e1 = 0.08;
    const AoppFiniteKeyResult res = aopp_finite_key(n1, n1 / 2, n1 / 2, e1, n_t, n_g, n_odd, sec);
    REQUIRE(!res.insufficient);
    const double u = n_g / (2.0 * n_odd);
    CHECK(res.n1_prime == doctest::Approx(u * n1 * n1 / (2.0 * n_t)).epsilon(1e-9));
    // e_tau -> e1, pair error -> 2 e1 (1 - e1)
    CHECK(res.e1ph_prime == doctest::Approx(2.0 * e1 * (1.0 - e1)).epsilon(1e-3));
}

TEST_CASE("finite-key chain is monotone in its error and count inputs") {
    SecurityParams sec;
    double prev = -1.0;
    for (double e1 = 0.01; e1 < 0.2; e1 += 0.01) {
        const auto res = aopp_finite_key(1.2e6, 6e5, 6e5, e1, 2.6e6, 9e5, 6e5, sec);
        REQUIRE(!res.insufficient);
        CHECK(res.e1ph_prime >= prev);
        prev = res.e1ph_prime;
    }
    prev = -1.0;
    for (double n1 = 2e5; n1 < 1.4e6; n1 += 1e5) {
        const auto res = aopp_finite_key(n1, n1 / 2, n1 / 2, 0.08, 2.6e6, 9e5, 6e5, sec);
        if (res.insufficient) continue;
        CHECK(res.n1_prime >= prev);
        prev = res.n1_prime;
    }
}

TEST_CASE("finite-key chain flags insufficient statistics") {
    SecurityParams sec;
    CHECK(aopp_finite_key(1e6, 5e5, 5e5, 0.08, 2.5e6, 9e5, 0.0, sec).insufficient);
    CHECK(aopp_finite_key(0.0, 0.0, 0.0, 0.08, 2.5e6, 9e5, 6e5, sec).insufficient);
    // tiny statistics: the pairing credit k collapses
    const auto res = aopp_finite_key(20.0, 10.0, 10.0, 0.08, 50.0, 18.0, 12.0, sec);
    CHECK(res.insufficient);
    CHECK(res.n1_prime == 0.0);
}
