// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <zlib.h>

#include "bpx/error.hpp"
#include "bpx/ingest.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bpx;

namespace {

Dataset parse(const std::string& text) {
    std::istringstream in(text);
    return parse_dataset(in);
}

std::string write(const Dataset& d) {
    std::ostringstream out;
    write_dataset(d, out);
    return out.str();
}

std::size_t parse_error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    FAIL("expected a parse error for: " << text);
    return 0;
}

}  // namespace

TEST_CASE("parse header and lines") {
    const auto d = parse("3 4 5\n0,2 1:0.5 3:1.0\n 2:1.0\n4\n");
    CHECK(d.num_instances() == 3);
    CHECK(d.num_features() == 4);
    CHECK(d.num_labels() == 5);

    const auto l0 = d.labels.row(0);
    CHECK(std::vector<index_t>(l0.begin(), l0.end()) == std::vector<index_t>{0, 2});
    CHECK(d.features.row(0).indices[0] == 1);
    CHECK(d.features.row(0).values[0] == 0.5);
    CHECK(d.features.row(0).indices[1] == 3);
    CHECK(d.features.row(0).values[1] == 1.0);

    CHECK(d.labels.row(1).empty());
    CHECK(d.features.row(1).indices[0] == 2);
    CHECK(d.labels.row(2)[0] == 4);
    CHECK(d.features.row(2).nnz() == 0);
}

TEST_CASE("parse errors carry the line number") {
    CHECK(parse_error_line("3 4\n") == 1);
    CHECK(parse_error_line("x 4 5\n") == 1);
    CHECK(parse_error_line("2 4 5\n0 1:1\n1 4:1\n") == 3);       // feature index == d
    CHECK(parse_error_line("2 4 5\n0 1:1\n5 1:1\n") == 3);       // label index == m
    CHECK(parse_error_line("1 4 5\n0 1:abc\n") == 2);
    CHECK(parse_error_line("1 4 5\n0 1:1 1:2\n") == 2);
    CHECK(parse_error_line("1 4 5\n0,0 1:1\n") == 2);
    CHECK(parse_error_line("1 4 5\n0 1:nan\n") == 2);
    CHECK_THROWS_AS(parse("3 4 5\n0 1:1\n"), ParseError);         // too few lines
    CHECK_THROWS_AS(parse("1 4 5\n0 1:1\n1 1:1\n"), ParseError);  // too many lines
}

TEST_CASE("write/parse round trips") {
    SUBCASE("empty label row keeps its leading space") {
        const auto d = parse("2 3 2\n 0:1.5\n1 2:2\n");
        const auto text = write(d);
        CHECK(text.find("\n 0:1.5\n") != std::string::npos);
        CHECK(parse(text) == d);
    }
    SUBCASE("1x1") {
        const auto d = parse("1 1 1\n0 0:0.125\n");
        CHECK(parse(write(d)) == d);
    }
    SUBCASE("random 50x20 datasets are a fixed point") {
        Rng rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            const auto d = testing::random_dataset(rng, 50, 20, 20, 0.2, 0.15);
            const auto once = write(d);
            const auto parsed = parse(once);
            CHECK(parsed == d);
            CHECK(write(parsed) == once);
        }
    }
}

TEST_CASE("parser rejects mutated files with out-of-range indices") {
    Rng rng(17);
    const auto d = testing::random_dataset(rng, 30, 8, 6, 0.4, 0.4);
    const auto text = write(d);
    std::size_t rejected = 0;
    for (int trial = 0; trial < 200; ++trial) {
        // push one index past its declared dimension
        std::istringstream in(text);
        std::string header, line;
        std::getline(in, header);
        std::vector<std::string> lines;
        while (std::getline(in, line)) lines.push_back(line);
        const auto target = rng.below(lines.size());
        auto& l = lines[target];
        const bool feature = rng.bernoulli(0.5);
        std::ostringstream mutated;
        if (feature) {
            mutated << l << ' ' << (8 + rng.below(5)) << ":1";
        } else {
            const auto space = std::min(l.find(' '), l.size());
            const auto bad = std::to_string(6 + rng.below(5));
            mutated << (space == 0 ? bad : bad + "," + l.substr(0, space)) << l.substr(space);
        }
        l = mutated.str();
        std::string rebuilt = header + "\n";
        for (const auto& s : lines) rebuilt += s + "\n";
        try {
            parse(rebuilt);
        } catch (const ParseError& e) {
            CHECK(e.line() == target + 2);
            ++rejected;
        }
    }
    CHECK(rejected == 200);
}

TEST_CASE("gzip input") {
    const auto dir = std::filesystem::temp_directory_path() / "bpx_ingest_test";
    std::filesystem::create_directories(dir);
    const std::string text = "2 3 2\n0,1 0:1 2:0.5\n 1:2\n";
    const auto gz = dir / "data.txt.gz";
    gzFile f = gzopen(gz.c_str(), "wb");
    REQUIRE(f != nullptr);
    gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
    gzclose(f);
    CHECK(load_dataset(gz) == parse(text));

    const auto plain = dir / "data.txt";
    save_dataset(parse(text), plain);
    CHECK(load_dataset(plain) == parse(text));
    CHECK_THROWS_AS(load_dataset(dir / "missing.txt"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("kfold indices") {
    const auto folds = kfold_indices(10, 5, 1);
    REQUIRE(folds.size() == 5);
    std::set<std::size_t> all;
    for (const auto& f : folds) {
        CHECK(f.size() == 2);
        CHECK(std::is_sorted(f.begin(), f.end()));
        all.insert(f.begin(), f.end());
    }
    CHECK(all.size() == 10);
    CHECK(*all.rbegin() == 9);
    CHECK(kfold_indices(10, 5, 1) == folds);
    CHECK(kfold_indices(10, 5, 2) != folds);

    for (std::size_t n : {7u, 11u, 23u}) {
        const auto f = kfold_indices(n, 3, 9);
        std::size_t lo = n, hi = 0, total = 0;
        for (const auto& v : f) {
            lo = std::min(lo, v.size());
            hi = std::max(hi, v.size());
            total += v.size();
        }
        CHECK(hi - lo <= 1);
        CHECK(total == n);
    }
}

TEST_CASE("kfold split datasets") {
    Rng rng(2);
    const auto d = testing::random_dataset(rng, 12, 5, 4, 0.5, 0.5);
    const auto splits = kfold_split(d, 4, 0);
    REQUIRE(splits.size() == 4);
    std::size_t validation_rows = 0;
    for (const auto& s : splits) {
        CHECK(s.train.num_instances() + s.validation.num_instances() == 12);
        CHECK(s.train.num_labels() == 4);
        validation_rows += s.validation.num_instances();
    }
    CHECK(validation_rows == 12);
    CHECK_THROWS_AS(kfold_split(d, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(kfold_split(d, 13, 0), std::invalid_argument);
}
