#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "xnap/encoding.hpp"
#include "xnap/error.hpp"

using namespace xnap;
using testing::log_from_csv;

namespace {

const char* kAb =
    "case,activity,timestamp\n"
    "1,B,2020-01-01 00:01:00\n"
    "1,A,2020-01-01 00:00:00\n";

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("vocabulary is sorted with the end symbol last") {
  const auto vocab = build_vocabulary(log_from_csv(kAb));
  CHECK(vocab.labels() == std::vector<std::string>{"A", "B", kEndActivity});
  CHECK(vocab.size() == 3);
  for (std::size_t i = 0; i < vocab.size(); ++i) CHECK(vocab.index_of(vocab.label(i)) == i);

  const auto single = build_vocabulary(log_from_csv("case,activity,timestamp\n1,A,2020-01-01 00:00:00\n"));
  CHECK(single.labels() == std::vector<std::string>{"A", kEndActivity});

  CHECK(code_of([] {
          build_vocabulary(log_from_csv("case,activity,timestamp\n1,__END__,2020-01-01 00:00:00\n"));
        }) == ErrorCode::ReservedLabelCollision);
  CHECK(code_of([] { ActivityVocabulary({"A", "__END__", "__END__"}); }) == ErrorCode::ReservedLabelCollision);
  CHECK_THROWS_AS(ActivityVocabulary({"A", "B"}), Error);
}

TEST_CASE("augment_with_end") {
  const auto log = log_from_csv(kAb);
  const auto vocab = build_vocabulary(log);
  CHECK(augment_with_end(log[0], vocab) == std::vector<std::size_t>{0, 1, 2});

  const auto one = log_from_csv("case,activity,timestamp\n1,A,2020-01-01 00:00:00\n");
  CHECK(augment_with_end(one[0], vocab) == std::vector<std::size_t>{0, 2});

  const auto z = log_from_csv("case,activity,timestamp\nq,Z,2020-01-01 00:00:00\n");
  try {
    augment_with_end(z[0], vocab);
    FAIL("expected UnknownActivity");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownActivity);
    CHECK(std::string(e.what()).find("'q'") != std::string::npos);
  }
}

TEST_CASE("generate_prefixes") {
  const std::vector<std::size_t> seq{10, 20, 30};
  const auto p = generate_prefixes(seq);
  REQUIRE(p.size() == 2);
  CHECK(p[0].first == std::vector<std::size_t>{10});
  CHECK(p[0].second == 20);
  CHECK(p[1].first == std::vector<std::size_t>{10, 20});
  CHECK(p[1].second == 30);

  const std::vector<std::size_t> two{4, 5};
  CHECK(generate_prefixes(two).size() == 1);
  const std::vector<std::size_t> one{4};
  CHECK(generate_prefixes(one).empty());
}

TEST_CASE("assemble_dataset hand-enumerated example") {
  const auto log = log_from_csv(kAb);
  const auto vocab = build_vocabulary(log);
  const auto ds = assemble_dataset(log, vocab, 3);
  CHECK(ds.x.depth() == 2);
  CHECK(ds.x.rows() == 3);
  CHECK(ds.x.cols() == 3);
  const std::vector<std::vector<double>> s0{{0, 0, 0}, {0, 0, 0}, {1, 0, 0}};
  const std::vector<std::vector<double>> s1{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(ds.x(0, r, c) == s0[r][c]);
      CHECK(ds.x(1, r, c) == s1[r][c]);
    }
  }
  CHECK(ds.labels == std::vector<std::size_t>{1, 2});
  CHECK(ds.y(0, 1) == 1.0);
  CHECK(ds.y(1, 2) == 1.0);
  CHECK(ds.true_lengths == std::vector<std::size_t>{1, 2});

  CHECK(max_augmented_length(log) == 3);
  // M equal to the trace length still fits the longest prefix, without padding.
  const auto tight = assemble_dataset(log, vocab, 2);
  CHECK(tight.x(1, 0, 0) == 1.0);
  CHECK(code_of([&] { assemble_dataset(log, vocab, 1); }) == ErrorCode::PrefixTooLong);
}

TEST_CASE("one-event traces produce no samples") {
  const auto log = log_from_csv(
      "case,activity,timestamp\n1,A,2020-01-01 00:00:00\n2,B,2020-01-01 00:00:00\n");
  const auto vocab = build_vocabulary(log);
  // Each one-event trace still yields <A> -> __END__.
  CHECK(assemble_dataset(log, vocab, 2).size() == 2);
  const std::vector<std::size_t> lone{0};
  CHECK(generate_prefixes(lone).empty());
}

TEST_CASE("dataset properties on random logs") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::string csv = "case,activity,timestamp\n";
    std::size_t expected = 0;
    const std::size_t cases = 1 + rng.below(5);
    for (std::size_t c = 0; c < cases; ++c) {
      const std::size_t len = 1 + rng.below(6);
      expected += len;  // augmented length - 1
      for (std::size_t e = 0; e < len; ++e) {
        csv += std::to_string(c) + "," + std::string(1, static_cast<char>('A' + rng.below(5))) +
               ",2020-01-01 00:00:0" + std::to_string(e) + "\n";
      }
    }
    const auto log = log_from_csv(csv);
    const auto vocab = build_vocabulary(log);
    const auto ds = assemble_dataset(log, vocab, max_augmented_length(log));
    CHECK(ds.size() == expected);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto view = ds.view(i);
      const auto slab = ds.x.slice(i);
      CHECK(std::accumulate(slab.begin(), slab.end(), 0.0) == static_cast<double>(view.true_length));
      for (std::size_t r = 0; r < ds.max_len - view.true_length; ++r) {
        for (std::size_t c = 0; c < ds.width; ++c) CHECK(ds.x(i, r, c) == 0.0);
      }
      for (std::size_t t = 0; t < view.true_length; ++t) {
        const auto row = view.event(t);
        CHECK(std::count(row.begin(), row.end(), 1.0) == 1);
      }
      // decode(encode(prefix)) == prefix
      const auto& trace = log[static_cast<std::size_t>(std::stoi(ds.case_ids[i]))];
      const auto acts = trace.activities();
      const auto decoded = decode(view, vocab);
      CHECK(decoded == std::vector<std::string>(acts.begin(), acts.begin() + view.true_length));
    }
  }
}

TEST_CASE("encode_running_trace") {
  const auto vocab = ActivityVocabulary({"A", "B", kEndActivity});
  const std::vector<std::string> one{"A"};
  CHECK(code_of([&] { encode_running_trace(one, vocab, 4); }) == ErrorCode::TraceTooShort);

  const std::vector<std::string> ab{"A", "B"};
  const auto s = encode_running_trace(ab, vocab, 4, "c");
  CHECK(s.true_length == 2);
  CHECK(!s.label.has_value());
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(s.rows(0, c) == 0.0);
    CHECK(s.rows(1, c) == 0.0);
  }
  CHECK(s.rows(2, 0) == 1.0);
  CHECK(s.rows(3, 1) == 1.0);

  const std::vector<std::string> five{"A", "B", "A", "B", "A"};
  CHECK(code_of([&] { encode_running_trace(five, vocab, 4); }) == ErrorCode::PrefixTooLong);
  const std::vector<std::string> unknown{"A", "Z"};
  CHECK(code_of([&] { encode_running_trace(unknown, vocab, 4); }) == ErrorCode::UnknownActivity);
}
