#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "fincast/ingest.hpp"

using namespace fincast;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("fincast_ingest_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

SchemaConfig tiny_schema() {
    SchemaConfig schema;
    schema.features.quarterly_names = {"eps", "assets", "rev"};
    schema.features.daily_names = {"ret", "prc"};
    return schema;
}

void write(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("load_panels: two firms sorted into two panels") {
    TempDir dir;
    write(dir.file("q.csv"),
          "firm,report_date,group,analyst_mean_eps,eps,assets,rev\n"
          "B,2014-06-30,nonfinancial,0.5,1.0,10,3\n"
          "A,2014-03-31,financial,,2.0,20,4\n"
          "B,2014-03-31,nonfinancial,0.4,1.5,11,5\n");
    write(dir.file("d.csv"),
          "firm,date,ret,prc\n"
          "A,2014-03-30,0.1,9\n"
          "A,2014-03-28,0.2,8\n");
    auto panels = load_panels(dir.file("q.csv"), dir.file("d.csv"), tiny_schema());
    REQUIRE(panels.size() == 2);
    CHECK(panels[0].firm == "A");
    CHECK(panels[1].firm == "B");
    REQUIRE(panels[1].quarters.size() == 2);
    CHECK(panels[1].quarters[0].report_date == Date{2014, 3, 31});  // sorted
    CHECK(panels[1].quarters[0].analyst_mean_eps == 0.4);
    CHECK(panels[0].quarters[0].group == Group::financial);
    CHECK_FALSE(panels[0].quarters[0].analyst_mean_eps.has_value());
    REQUIRE(panels[0].days.size() == 2);
    CHECK(panels[0].days[0].date == Date{2014, 3, 28});
    // eps/assets mirrors line up with the feature cells
    CHECK(panels[1].quarters[0].eps == 1.5);
    CHECK(panels[1].quarters[0].total_assets == 11.0);
}

TEST_CASE("load_panels: empty eps cell becomes a gap, not a number") {
    TempDir dir;
    write(dir.file("q.csv"),
          "firm,report_date,group,analyst_mean_eps,eps,assets,rev\n"
          "A,2014-03-31,nonfinancial,,,20,4\n");
    write(dir.file("d.csv"), "firm,date,ret,prc\n");
    auto panels = load_panels(dir.file("q.csv"), dir.file("d.csv"), tiny_schema());
    REQUIRE(panels.size() == 1);
    CHECK_FALSE(panels[0].quarters[0].eps.has_value());
    CHECK_FALSE(panels[0].quarters[0].features[0].has_value());
    CHECK(panels[0].quarters[0].features[1] == 20.0);
}

TEST_CASE("load_panels: duplicate (firm, date) is rejected") {
    TempDir dir;
    write(dir.file("q.csv"),
          "firm,report_date,group,analyst_mean_eps,eps,assets,rev\n"
          "A,2014-03-31,nonfinancial,,1,20,4\n"
          "A,2014-03-31,nonfinancial,,2,21,5\n");
    write(dir.file("d.csv"), "firm,date,ret,prc\n");
    CHECK_THROWS_WITH(load_panels(dir.file("q.csv"), dir.file("d.csv"), tiny_schema()),
                      Catch::Matchers::ContainsSubstring("duplicate record"));
}

TEST_CASE("load_panels: malformed row reports the line number") {
    TempDir dir;
    write(dir.file("q.csv"),
          "firm,report_date,group,analyst_mean_eps,eps,assets,rev\n"
          "A,2014-03-31,nonfinancial,,1,20,4\n"
          "A,2014-06-30,nonfinancial,,not_a_number,21,5\n");
    write(dir.file("d.csv"), "firm,date,ret,prc\n");
    CHECK_THROWS_WITH(load_panels(dir.file("q.csv"), dir.file("d.csv"), tiny_schema()),
                      Catch::Matchers::ContainsSubstring(":3"));

    write(dir.file("q2.csv"),
          "firm,report_date,group,analyst_mean_eps,eps,assets,rev\n"
          "A,2014-03-31,nonfinancial,,1,20\n");
    CHECK_THROWS_WITH(load_panels(dir.file("q2.csv"), dir.file("d.csv"), tiny_schema()),
                      Catch::Matchers::ContainsSubstring("malformed row"));
}

TEST_CASE("load_panels: missing mandatory column is a schema error") {
    TempDir dir;
    write(dir.file("q.csv"),
          "firm,report_date,group,analyst_mean_eps,eps,assets\n"
          "A,2014-03-31,nonfinancial,,1,20\n");
    write(dir.file("d.csv"), "firm,date,ret,prc\n");
    CHECK_THROWS_WITH(load_panels(dir.file("q.csv"), dir.file("d.csv"), tiny_schema()),
                      Catch::Matchers::ContainsSubstring("schema error"));
}

TEST_CASE("schema validation rejects duplicate columns") {
    SchemaConfig schema = tiny_schema();
    schema.features.quarterly_names = {"eps", "assets", "eps"};
    CHECK_THROWS(schema.validate());
}

TEST_CASE("synthetic generation is bit-reproducible") {
    SyntheticConfig cfg;
    cfg.n_firms = 5;
    cfg.n_quarters = 24;
    cfg.seed = 99;
    auto a = generate_synthetic(cfg);
    auto b = generate_synthetic(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].quarters.size() == b[i].quarters.size());
        for (std::size_t q = 0; q < a[i].quarters.size(); ++q) {
            CHECK(a[i].quarters[q].features == b[i].quarters[q].features);
            CHECK(a[i].quarters[q].analyst_mean_eps == b[i].quarters[q].analyst_mean_eps);
        }
        REQUIRE(a[i].days.size() == b[i].days.size());
        for (std::size_t d = 0; d < a[i].days.size(); ++d)
            CHECK(a[i].days[d].features == b[i].days[d].features);
    }
}

TEST_CASE("synthetic degenerate dynamics give constant-zero eps") {
    SyntheticConfig cfg;
    cfg.n_firms = 2;
    cfg.n_quarters = 21;
    cfg.ar_coefficient = 0.0;
    cfg.seasonal_amplitude = 0.0;
    cfg.noise_std = 0.0;
    cfg.missing_rate = 0.0;
    auto panels = generate_synthetic(cfg);
    for (const auto& p : panels)
        for (const auto& q : p.quarters) CHECK(*q.eps == 0.0);
}

TEST_CASE("synthetic missing rate lands near the requested share") {
    SyntheticConfig cfg;
    cfg.n_firms = 10;
    cfg.n_quarters = 40;
    cfg.missing_rate = 0.05;
    cfg.seed = 4;
    auto panels = generate_synthetic(cfg);
    std::size_t cells = 0, gaps = 0;
    for (const auto& p : panels)
        for (const auto& q : p.quarters)
            for (const auto& cell : q.features) {
                ++cells;
                if (!cell) ++gaps;
            }
    const double share = static_cast<double>(gaps) / static_cast<double>(cells);
    CHECK(share > 0.03);
    CHECK(share < 0.07);
}

TEST_CASE("synthetic config invariants") {
    SyntheticConfig cfg;
    cfg.n_firms = 0;
    CHECK_THROWS(cfg.validate());
    cfg = SyntheticConfig{};
    cfg.n_quarters = 10;
    CHECK_THROWS(cfg.validate());  // below window + horizon
    cfg = SyntheticConfig{};
    cfg.ar_coefficient = 1.0;
    CHECK_THROWS(cfg.validate());
    cfg = SyntheticConfig{};
    cfg.missing_rate = 1.0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("synthetic analysts with zero noise equal the next quarter's eps") {
    SyntheticConfig cfg;
    cfg.n_firms = 3;
    cfg.n_quarters = 24;
    cfg.analyst_noise_std = 0.0;
    cfg.missing_rate = 0.0;
    auto panels = generate_synthetic(cfg);
    for (const auto& p : panels) {
        for (std::size_t q = 0; q + 1 < p.quarters.size(); ++q) {
            REQUIRE(p.quarters[q].analyst_mean_eps.has_value());
            CHECK(*p.quarters[q].analyst_mean_eps == *p.quarters[q + 1].eps);
        }
        CHECK_FALSE(p.quarters.back().analyst_mean_eps.has_value());
    }
}

TEST_CASE("write_panels / load_panels round trip is exact") {
    TempDir dir;
    SyntheticConfig cfg;
    cfg.n_firms = 4;
    cfg.n_quarters = 22;
    cfg.missing_rate = 0.08;
    cfg.seed = 31;
    auto panels = generate_synthetic(cfg);
    SchemaConfig schema;  // default 19/11 column schema matches the generator
    write_panels(panels, dir.file("q.csv"), dir.file("d.csv"), schema);
    auto loaded = load_panels(dir.file("q.csv"), dir.file("d.csv"), schema);
    REQUIRE(loaded.size() == panels.size());
    for (std::size_t i = 0; i < panels.size(); ++i) {
        CHECK(loaded[i].firm == panels[i].firm);
        REQUIRE(loaded[i].quarters.size() == panels[i].quarters.size());
        for (std::size_t q = 0; q < panels[i].quarters.size(); ++q) {
            const auto& x = panels[i].quarters[q];
            const auto& y = loaded[i].quarters[q];
            CHECK(x.report_date == y.report_date);
            CHECK(x.group == y.group);
            CHECK(x.features == y.features);  // bitwise: shortest round-trip formatting
            CHECK(x.analyst_mean_eps == y.analyst_mean_eps);
        }
        REQUIRE(loaded[i].days.size() == panels[i].days.size());
        for (std::size_t d = 0; d < panels[i].days.size(); ++d) {
            CHECK(loaded[i].days[d].date == panels[i].days[d].date);
            CHECK(loaded[i].days[d].features == panels[i].days[d].features);
        }
    }
}
