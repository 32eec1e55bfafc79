#pragma once

// Exhaustive comparison of rouge_n_ids / rouge_l_ids against counting and
// common-subsequence-enumeration oracles over every canonical pair.
//
// The string-level metrics intern tokens in first-occurrence order over
// cand then ref, so every pair over a 4-symbol alphabet reaches the id-level
// core as a restricted growth string split into (cand, ref). Enumerating all
// such splits with both sides of length <= max_len therefore covers every
// string pair of those lengths.

#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sabia/metrics.hpp"

namespace sabia::test {

struct SweepResult {
  std::uint64_t pairs = 0;
  std::uint64_t mismatches = 0;
  std::string first_mismatch;
};

class RougeSweep {
 public:
  static constexpr int kSymbols = 4;

  explicit RougeSweep(int max_len) : max_len_(max_len) {}

  SweepResult run(unsigned threads) {
    std::vector<std::vector<std::uint32_t>> cands;
    std::vector<std::uint32_t> buf;
    collect_cands(buf, 0, cands);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<SweepResult> partial(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        Worker w(max_len_);
        for (std::size_t i = next++; i < cands.size(); i = next++) {
          w.sweep(cands[i]);
        }
        partial[t] = w.result;
      });
    }
    for (auto& th : pool) th.join();
    SweepResult total;
    for (const auto& p : partial) {
      total.pairs += p.pairs;
      total.mismatches += p.mismatches;
      if (total.first_mismatch.empty()) total.first_mismatch = p.first_mismatch;
    }
    return total;
  }

 private:
  static std::uint32_t used_symbols(const std::vector<std::uint32_t>& seq) {
    std::uint32_t used = 0;
    for (const auto x : seq) used = std::max(used, x + 1);
    return used;
  }

  void collect_cands(std::vector<std::uint32_t>& buf, std::uint32_t used,
                     std::vector<std::vector<std::uint32_t>>& out) const {
    out.push_back(buf);
    if (static_cast<int>(buf.size()) == max_len_) return;
    for (std::uint32_t x = 0; x <= used && x < kSymbols; ++x) {
      buf.push_back(x);
      collect_cands(buf, x == used ? used + 1 : used, out);
      buf.pop_back();
    }
  }

  // Oracle state for one fixed candidate while the reference grows.
  struct Worker {
    explicit Worker(int max_len) : max_len(max_len) {}

    int max_len;
    SweepResult result;

    std::vector<std::uint32_t> cand;
    std::array<int, kSymbols> cand_uni{};
    std::array<int, kSymbols * kSymbols> cand_bi{};
    // Trie of the distinct subsequences of cand: child[node][x], -1 if absent.
    std::vector<std::array<int, kSymbols>> child;
    std::vector<int> depth;

    std::vector<std::uint32_t> ref;
    std::array<int, kSymbols> ref_uni{};
    std::array<int, kSymbols * kSymbols> ref_bi{};

    using NodeSet = std::array<std::uint64_t, 4>;

    void build_trie() {
      // Node = distinct subsequence, identified by its leftmost embedding end.
      child.clear();
      depth.clear();
      std::vector<int> end_pos;
      child.push_back({-1, -1, -1, -1});
      depth.push_back(0);
      end_pos.push_back(-1);
      for (std::size_t node = 0; node < child.size(); ++node) {
        for (int x = 0; x < kSymbols; ++x) {
          for (int p = end_pos[node] + 1; p < static_cast<int>(cand.size()); ++p) {
            if (static_cast<int>(cand[static_cast<std::size_t>(p)]) == x) {
              child[node][static_cast<std::size_t>(x)] = static_cast<int>(child.size());
              child.push_back({-1, -1, -1, -1});
              depth.push_back(depth[node] + 1);
              end_pos.push_back(p);
              break;
            }
          }
        }
      }
    }

    void sweep(const std::vector<std::uint32_t>& c) {
      cand = c;
      cand_uni.fill(0);
      cand_bi.fill(0);
      for (std::size_t i = 0; i < cand.size(); ++i) {
        ++cand_uni[cand[i]];
        if (i + 1 < cand.size()) ++cand_bi[cand[i] * kSymbols + cand[i + 1]];
      }
      build_trie();
      ref.clear();
      ref_uni.fill(0);
      ref_bi.fill(0);
      NodeSet common{};
      common[0] = 1;  // the empty subsequence
      grow(used_symbols(cand), common, 0, 0, 0);
    }

    void grow(std::uint32_t used, const NodeSet& common, int lcs, int m1, int m2) {
      check(lcs, m1, m2);
      if (static_cast<int>(ref.size()) == max_len) return;
      for (std::uint32_t x = 0; x <= used && x < kSymbols; ++x) {
        // Every common subsequence extended by x, if that is still a subsequence of cand.
        NodeSet next = common;
        int next_lcs = lcs;
        for (std::size_t w = 0; w < common.size(); ++w) {
          for (std::uint64_t bits = common[w]; bits != 0; bits &= bits - 1) {
            const auto node = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
            const int c = child[node][x];
            if (c >= 0) {
              next[static_cast<std::size_t>(c) / 64] |= std::uint64_t{1} << (c % 64);
              next_lcs = std::max(next_lcs, depth[static_cast<std::size_t>(c)]);
            }
          }
        }
        const int add1 = ref_uni[x] < cand_uni[x] ? 1 : 0;
        ++ref_uni[x];
        int add2 = 0;
        std::size_t bigram = 0;
        if (!ref.empty()) {
          bigram = ref.back() * kSymbols + x;
          add2 = ref_bi[bigram] < cand_bi[bigram] ? 1 : 0;
          ++ref_bi[bigram];
        }
        ref.push_back(x);
        grow(x == used ? used + 1 : used, next, next_lcs, m1 + add1, m2 + add2);
        ref.pop_back();
        if (!ref.empty()) --ref_bi[bigram];
        --ref_uni[x];
      }
    }

    static bool close(double a, double b) { return std::fabs(a - b) <= 1e-12; }

    static RougeScore expected(int matches, std::size_t cand_units, std::size_t ref_units) {
      RougeScore s;
      if (cand_units == 0 || ref_units == 0) return s;
      s.precision = static_cast<double>(matches) / static_cast<double>(cand_units);
      s.recall = static_cast<double>(matches) / static_cast<double>(ref_units);
      s.f1 = matches == 0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
      return s;
    }

    // expected() for every (matches, cand units, ref units) up to max_len.
    std::vector<RougeScore> table;
    std::size_t stride = 0;

    const RougeScore& want(int matches, std::size_t cand_units, std::size_t ref_units) {
      if (table.empty()) {
        stride = static_cast<std::size_t>(max_len) + 1;
        table.resize(stride * stride * stride);
        for (std::size_t m = 0; m < stride; ++m)
          for (std::size_t c = 0; c < stride; ++c)
            for (std::size_t r = 0; r < stride; ++r)
              table[(m * stride + c) * stride + r] = expected(static_cast<int>(m), c, r);
      }
      return table[(static_cast<std::size_t>(matches) * stride + cand_units) * stride + ref_units];
    }

    void check(int lcs, int m1, int m2) {
      ++result.pairs;
      const IdSpan c(cand);
      const IdSpan r(ref);
      auto grams = [](std::size_t len, std::size_t n) { return len >= n ? len - n + 1 : 0; };
      const RougeScore* want_of[3] = {&want(m1, grams(cand.size(), 1), grams(ref.size(), 1)),
                                      &want(m2, grams(cand.size(), 2), grams(ref.size(), 2)),
                                      &want(lcs, cand.size(), ref.size())};
      const RougeScore got[3] = {rouge_n_ids(c, r, 1), rouge_n_ids(c, r, 2), rouge_l_ids(c, r)};
      for (int k = 0; k < 3; ++k) {
        const RougeScore& w = *want_of[k];
        if (!close(got[k].precision, w.precision) || !close(got[k].recall, w.recall) || !close(got[k].f1, w.f1)) {
          if (result.mismatches++ == 0) {
            result.first_mismatch = describe(k);
          }
        }
      }
    }

    std::string describe(int metric) const {
      static const char* names[3] = {"rouge_1", "rouge_2", "rouge_l"};
      std::string s = std::string(names[metric]) + " cand=";
      for (const auto x : cand) s += static_cast<char>('a' + x);
      s += " ref=";
      for (const auto x : ref) s += static_cast<char>('a' + x);
      return s;
    }
  };

  int max_len_;
};

}  // namespace sabia::test
