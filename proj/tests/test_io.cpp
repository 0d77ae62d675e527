#include "svgmrf/error.hpp"
#include "svgmrf/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

using namespace svgmrf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("svgmrf_io_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

Eigen::MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            m(i, j) = normal(rng);
        }
    }
    return m;
}

}  // namespace

TEST_CASE("doubles round-trip through text") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<double>(i % 40 - 20));
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(parse_double(" 2.5 ") == 2.5);
    CHECK(parse_integer("42") == 42);
    CHECK_THROWS_AS(parse_double("abc"), InvalidArgument);
    CHECK_THROWS_AS(parse_double(""), InvalidArgument);
    CHECK_THROWS_AS(parse_integer("4.5"), InvalidArgument);
    CHECK(format_optional(std::nullopt) == "nan");
    CHECK(format_optional(0.25) == "0.25");
}

TEST_CASE("splitting and joining") {
    CHECK(split_csv_line(" a, b ,c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split("1;2;3", ';') == std::vector<std::string>{"1", "2", "3"});
    CHECK(join({"x", "y"}, ",") == "x,y");
    CHECK(join_doubles({0.5, 2.0}, ";") == "0.5;2");
    CHECK(join_indices({-1, 0, 3}, " ") == "-1 0 3");
}

TEST_CASE("matrix csv round trip with and without header") {
    TempDir dir;
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd m = random_matrix(7, 4, rng);
    write_matrix_csv(dir.path / "a.csv", m);
    CHECK((read_matrix_csv(dir.path / "a.csv").array() == m.array()).all());
    write_matrix_csv(dir.path / "b.csv", m, {"w", "x", "y", "z"});
    CHECK((read_matrix_csv(dir.path / "b.csv").array() == m.array()).all());
}

TEST_CASE("matrix csv errors") {
    TempDir dir;
    write_text(dir.path / "ragged.csv", "1,2\n3\n");
    CHECK_THROWS_AS(read_matrix_csv(dir.path / "ragged.csv"), IoError);
    write_text(dir.path / "text.csv", "a,b\n1,2\nx,3\n");
    CHECK_THROWS_AS(read_matrix_csv(dir.path / "text.csv"), IoError);
    write_text(dir.path / "empty.csv", "a,b\n");
    CHECK_THROWS_AS(read_matrix_csv(dir.path / "empty.csv"), IoError);
    CHECK_THROWS_AS(read_matrix_csv(dir.path / "missing.csv"), IoError);
    write_text(dir.path / "blank.csv", "1,2\n\n3,4\n");
    CHECK(read_matrix_csv(dir.path / "blank.csv").rows() == 2);
}

TEST_CASE("clustered samples round trip") {
    TempDir dir;
    std::mt19937_64 rng(3);
    const std::vector<Eigen::MatrixXd> samples{random_matrix(5, 3, rng), random_matrix(2, 3, rng),
                                               random_matrix(4, 3, rng)};
    write_clustered_csv(dir.path / "s.csv", samples);
    const auto back = read_clustered_csv(dir.path / "s.csv");
    REQUIRE(back.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK((back[k].array() == samples[k].array()).all());
    }
    write_text(dir.path / "gap.csv", "cluster,x0\n0,1\n2,1\n");
    CHECK_THROWS_AS(read_clustered_csv(dir.path / "gap.csv"), IoError);
    write_text(dir.path / "neg.csv", "-1,1\n0,1\n");
    CHECK_THROWS_AS(read_clustered_csv(dir.path / "neg.csv"), IoError);
    CHECK_THROWS_AS(write_clustered_csv(dir.path / "none.csv", {}), InvalidArgument);
}

TEST_CASE("edge lists keep the upper triangle and round trip") {
    TempDir dir;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    m(0, 0) = 1.5;
    m(1, 3) = m(3, 1) = -0.25;
    m(2, 2) = 0.1;
    write_edge_list(dir.path / "e.edges", m);
    std::ifstream in(dir.path / "e.edges");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text == "i,j,value\n0,0,1.5\n1,3,-0.25\n2,2,0.1\n");
    CHECK((read_edge_list(dir.path / "e.edges", 4).array() == m.array()).all());
    const Eigen::SparseMatrix<double> sp = m.sparseView();
    write_edge_list(dir.path / "s.edges", sp);
    CHECK((read_edge_list(dir.path / "s.edges", 4).array() == m.array()).all());
    CHECK_THROWS_AS(read_edge_list(dir.path / "e.edges", 3), IoError);
    write_text(dir.path / "bad.edges", "i,j,value\n0,1\n");
    CHECK_THROWS_AS(read_edge_list(dir.path / "bad.edges", 3), IoError);
}

TEST_CASE("manifest round trip") {
    TempDir dir;
    Manifest m;
    m.set("name", std::string("run one"));
    m.set("mu", 0.125);
    m.set("k", 7LL);
    m.set("mu", 0.25);
    m.write(dir.path / "m.txt");
    const Manifest r = Manifest::read(dir.path / "m.txt");
    CHECK(r.entries() == m.entries());
    CHECK(r.get("name") == "run one");
    CHECK(r.get_double("mu") == 0.25);
    CHECK(r.get_integer("k") == 7);
    CHECK(r.contains("k"));
    CHECK_FALSE(r.contains("q"));
    CHECK_THROWS_AS(r.get("q"), IoError);
    CHECK_THROWS_AS(m.set("a=b", std::string("c")), InvalidArgument);
    CHECK_THROWS_AS(m.set("a", std::string("x\ny")), InvalidArgument);
    write_text(dir.path / "bad.txt", "# comment\nno equals sign\n");
    CHECK_THROWS_AS(Manifest::read(dir.path / "bad.txt"), IoError);
}

TEST_CASE("tables") {
    TempDir dir;
    write_table_csv(dir.path / "t.csv", {"a", "b"}, {{"1", "x"}, {"2", "y"}});
    const Table t = read_table_csv(dir.path / "t.csv");
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][t.column("b")] == "y");
    CHECK_THROWS_AS(t.column("c"), IoError);
    CHECK_THROWS_AS(write_table_csv(dir.path / "u.csv", {"a"}, {{"1", "2"}}), InvalidArgument);
}

TEST_CASE("bic report lists one row per triple") {
    TempDir dir;
    BicReport report;
    BicRow good;
    good.c1 = 1.0;
    good.c2 = 2.0;
    good.c3 = 0.5;
    good.nu = {0.1, 0.2};
    good.bic.valid = true;
    good.bic.score = 12.5;
    good.bic.df = {3, 4};
    BicRow bad = good;
    bad.bic.valid = false;
    bad.bic.score = std::numeric_limits<double>::infinity();
    bad.bic.reason = "cluster 1, singular";
    report.rows = {good, bad};
    report.selected = 0;
    write_bic_report(dir.path / "bic.csv", report);
    const Table t = read_table_csv(dir.path / "bic.csv");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][t.column("df")] == "3;4");
    CHECK(t.rows[0][t.column("nu")] == "0.1;0.2");
    CHECK(t.rows[0][t.column("selected")] == "1");
    CHECK(t.rows[1][t.column("valid")] == "0");
    CHECK(t.rows[1][t.column("bic")] == "nan");
    CHECK(t.rows[1][t.column("reason")] == "cluster 1; singular");
}
