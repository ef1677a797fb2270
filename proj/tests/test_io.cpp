#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "io.hpp"
#include "plrank/plrank.h"

using namespace plrank;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("csv ingestion") {
  SUBCASE("two epochs of top-3 lists") {
    const io::Dataset d = io::ingest_csv_text(
        "epoch,rank,item\n"
        "1,1,aa\n1,2,bb\n1,3,cc\n"
        "2,1,bb\n2,2,dd\n2,3,aa\n");
    CHECK(d.epochs() == 2);
    CHECK(d.num_items() == 4);
    CHECK(d.lists[0][0].size() == 3);
    CHECK(d.item_labels[static_cast<std::size_t>(d.lists[1][0].items[0])] == "bb");
    CHECK(d.gaps == std::vector<double>{1.0});
    CHECK(!d.dated);
  }

  SUBCASE("dated epochs keep day gaps and sort order") {
    const io::Dataset d = io::ingest_csv_text(
        "epoch,rank,item\n"
        "2010-01-15,1,x\n"
        "2010-01-01,1,y\n");
    CHECK(d.dated);
    CHECK(d.epoch_labels == std::vector<std::string>{"2010-01-01", "2010-01-15"});
    CHECK(d.gaps == std::vector<double>{14.0});
  }

  SUBCASE("rank gap is reported with the epoch") {
    CHECK_THROWS_WITH_AS(
        (void)io::ingest_csv_text("epoch,rank,item\n5,1,a\n5,3,b\n"),
        doctest::Contains("epoch 5"), std::runtime_error);
  }

  SUBCASE("duplicate rank and duplicate item carry line numbers") {
    CHECK_THROWS_WITH_AS(
        (void)io::ingest_csv_text("epoch,rank,item\n1,1,a\n1,1,b\n"),
        doctest::Contains("line 3"), std::runtime_error);
    CHECK_THROWS_WITH_AS(
        (void)io::ingest_csv_text("epoch,rank,item\n1,1,a\n1,2,a\n"),
        doctest::Contains("duplicate item"), std::runtime_error);
  }

  SUBCASE("unparsable rows and headers are rejected") {
    CHECK_THROWS_AS((void)io::ingest_csv_text("foo,bar\n"), std::runtime_error);
    CHECK_THROWS_WITH_AS(
        (void)io::ingest_csv_text("epoch,rank,item\nnot-a-date,1,a\n"),
        doctest::Contains("line 2"), std::runtime_error);
    CHECK_THROWS_AS((void)io::ingest_csv_text("epoch,rank,item\n1,zero,a\n"),
                    std::runtime_error);
    CHECK_THROWS_AS((void)io::ingest_csv_text("epoch,rank,item\n1,1,a\n2010-01-01,1,b\n"),
                    std::runtime_error);
  }

  SUBCASE("simulated export round-trips") {
    io::SimulateSpec spec;
    spec.model = "dynamic";
    spec.alpha = 2.0;
    spec.phi = 20.0;
    spec.epochs = 200;
    spec.list_len = 5;
    spec.seed = 11;
    const io::SimulateResult sim = io::simulate(spec);
    const std::string csv = io::dataset_to_csv(sim.data);
    const io::Dataset back = io::ingest_csv_text(csv);
    REQUIRE(back.epochs() == sim.data.epochs());
    for (int t = 0; t < back.epochs(); ++t) {
      REQUIRE(back.lists[t].size() == 1);
      REQUIRE(back.lists[t][0].size() == sim.data.lists[t][0].size());
      for (int i = 0; i < back.lists[t][0].size(); ++i) {
        const std::string& a =
            back.item_labels[static_cast<std::size_t>(back.lists[t][0].items[i])];
        const std::string& b = sim.data.item_labels[static_cast<std::size_t>(
            sim.data.lists[t][0].items[i])];
        CHECK(a == b);
      }
    }
  }
}

TEST_CASE("run config parsing") {
  SUBCASE("defaults mirror the reference protocol") {
    const io::RunConfig cfg = io::parse_run_config("{}");
    CHECK(cfg.iterations == 20000);
    CHECK(cfg.burn_in == 10000);
    CHECK(cfg.thinning == 1);
    CHECK(cfg.tau == 1.0);
    CHECK(cfg.alpha_prior.improper());
    CHECK(cfg.phi_prior.improper);
    CHECK(cfg.first_appearance_filter);
  }

  SUBCASE("validation") {
    CHECK_THROWS_AS((void)io::parse_run_config("{\"iterations\": 5}"),
                    std::runtime_error);
    CHECK_THROWS_AS((void)io::parse_run_config("{\"model\": \"banana\"}"),
                    std::runtime_error);
    CHECK_THROWS_AS((void)io::parse_run_config("not json"), std::runtime_error);
  }

  SUBCASE("round-trips through json") {
    io::RunConfig cfg;
    cfg.model = "dynamic";
    cfg.alpha_prior = {2.0, 3.0};
    cfg.phi_mode = "xi";
    cfg.xi = 0.25;
    cfg.seed = 99;
    const io::RunConfig back = io::parse_run_config(io::run_config_to_json(cfg));
    CHECK(back.model == "dynamic");
    CHECK(back.alpha_prior.a == 2.0);
    CHECK(back.phi_mode == "xi");
    CHECK(back.xi == 0.25);
    CHECK(back.seed == 99);
  }
}

TEST_CASE("chain persistence and summaries") {
  const io::Dataset d = io::ingest_csv_text(
      "epoch,rank,item\n"
      "1,1,aa\n1,2,bb\n"
      "2,1,bb\n2,2,cc\n"
      "3,1,aa\n3,2,cc\n");
  io::RunConfig cfg;
  cfg.model = "dynamic";
  cfg.iterations = 400;
  cfg.burn_in = 200;
  cfg.seed = 5;
  cfg.first_appearance_filter = true;
  const PosteriorChain chain = io::fit(d, cfg);
  CHECK(chain.epochs == 3);
  CHECK(chain.item_labels == std::vector<std::string>{"aa", "bb", "cc"});

  SUBCASE("jsonl round-trip") {
    const std::string text = io::chain_to_jsonl(chain);
    const PosteriorChain back = io::chain_from_jsonl(text);
    CHECK(back.model == chain.model);
    CHECK(back.epochs == chain.epochs);
    CHECK(back.item_labels == chain.item_labels);
    REQUIRE(back.draws.size() == chain.draws.size());
    CHECK(back.draws[3].alpha == chain.draws[3].alpha);
    CHECK(back.draws[7].w[2][1] == chain.draws[7].w[2][1]);
    // summaries derived from the reloaded chain are byte-identical
    CHECK(io::summary_to_csv(back) == io::summary_to_csv(chain));
  }

  SUBCASE("normalized weights sum to one per epoch") {
    const auto rows = summarize_normalized_weights(chain);
    for (int epoch = 1; epoch <= 3; ++epoch) {
      double total = 0;
      for (const auto& r : rows)
        if (r.epoch == epoch) total += r.mean;
      CHECK(std::fabs(total - 1.0) < 1e-9);
    }
    // the filtered item cc has zero weight before its first appearance
    for (const auto& r : rows)
      if (r.epoch == 1 && r.item == "cc") CHECK(r.mean == 0.0);
  }

  SUBCASE("corrupt chain files are rejected") {
    CHECK_THROWS_AS((void)io::chain_from_jsonl(""), std::runtime_error);
    CHECK_THROWS_AS((void)io::chain_from_jsonl("{\"type\":\"nope\"}\n"),
                    std::runtime_error);
  }
}

TEST_CASE("diagnose suites produce machine-readable reports") {
  const std::string report = io::diagnose("enumerate", "{\"seed\": 3}");
  CHECK(report.find("\"suite\": \"enumerate\"") != std::string::npos);
  CHECK(report.find("\"pass\": true") != std::string::npos);
  CHECK_THROWS_AS((void)io::diagnose("bogus", ""), std::runtime_error);
}

TEST_CASE("c api lifecycle") {
  CHECK(std::string(plr_version()) == "0.1.0");
  CHECK(std::string(plr_status_name(PLR_OK)) == "ok");

  SUBCASE("null arguments are invalid") {
    CHECK(plr_dataset_load_csv(nullptr, nullptr) == PLR_ERR_INVALID_ARGUMENT);
    CHECK(std::string(plr_last_error()) == "null argument");
  }

  SUBCASE("missing files are io errors") {
    plr_dataset* data = nullptr;
    CHECK(plr_dataset_load_csv("/nonexistent/nope.csv", &data) == PLR_ERR_IO);
    CHECK(std::string(plr_last_error()).find("nope.csv") != std::string::npos);
  }

  SUBCASE("parse errors carry the line") {
    plr_dataset* data = nullptr;
    CHECK(plr_dataset_parse_csv("epoch,rank,item\n1,2,a\n", &data) == PLR_ERR_PARSE);
  }

  SUBCASE("simulate, fit, save, reload, summarize") {
    const char* sim_cfg =
        "{\"model\":\"dynamic\",\"alpha\":1.5,\"phi\":15,\"epochs\":6,"
        "\"list_len\":4,\"seed\":42}";
    plr_dataset* data = nullptr;
    char* truth = nullptr;
    REQUIRE(plr_simulate(sim_cfg, &data, &truth) == PLR_OK);
    CHECK(plr_dataset_num_epochs(data) == 6);
    CHECK(plr_dataset_num_items(data) > 0);
    CHECK(std::string(truth).find("\"phi\"") != std::string::npos);
    plr_string_free(truth);

    const char* fit_cfg =
        "{\"model\":\"dynamic\",\"iterations\":300,\"burn_in\":100,\"seed\":7,"
        "\"first_appearance_filter\":false}";
    plr_chain* chain = nullptr;
    REQUIRE(plr_fit(data, fit_cfg, &chain) == PLR_OK);
    CHECK(plr_chain_num_draws(chain) == 200);

    const std::string chain_path = tmp_path("plrank_test_chain.jsonl");
    const std::string summary_path = tmp_path("plrank_test_summary.csv");
    REQUIRE(plr_chain_save_jsonl(chain, chain_path.c_str()) == PLR_OK);
    plr_chain* reloaded = nullptr;
    REQUIRE(plr_chain_load_jsonl(chain_path.c_str(), &reloaded) == PLR_OK);
    CHECK(plr_chain_num_draws(reloaded) == 200);
    REQUIRE(plr_chain_summary_csv(reloaded, summary_path.c_str()) == PLR_OK);
    const std::string summary = io::read_file(summary_path);
    CHECK(summary.rfind("epoch,item,mean,q025,q975\n", 0) == 0);

    // identical configs give byte-identical chains
    plr_chain* chain2 = nullptr;
    REQUIRE(plr_fit(data, fit_cfg, &chain2) == PLR_OK);
    const std::string chain_path2 = tmp_path("plrank_test_chain2.jsonl");
    REQUIRE(plr_chain_save_jsonl(chain2, chain_path2.c_str()) == PLR_OK);
    CHECK(io::read_file(chain_path) == io::read_file(chain_path2));

    // pooling draws
    REQUIRE(plr_chain_append(chain, chain2) == PLR_OK);
    CHECK(plr_chain_num_draws(chain) == 400);

    plr_chain_free(chain);
    plr_chain_free(chain2);
    plr_chain_free(reloaded);
    plr_dataset_free(data);
    std::remove(chain_path.c_str());
    std::remove(chain_path2.c_str());
    std::remove(summary_path.c_str());
  }

  SUBCASE("diagnose through the c api") {
    char* report = nullptr;
    REQUIRE(plr_diagnose("psi-kappa", "{\"seed\":1}", &report) == PLR_OK);
    CHECK(std::string(report).find("\"pass\": true") != std::string::npos);
    plr_string_free(report);
    CHECK(plr_diagnose("bogus", nullptr, &report) == PLR_ERR_PARSE);
  }
}

TEST_CASE("xi mapping drives per-gap schedules in fit") {
  // dated epochs with unequal gaps: one week then three weeks
  const io::Dataset d = io::ingest_csv_text(
      "epoch,rank,item\n"
      "2011-01-01,1,a\n2011-01-01,2,b\n"
      "2011-01-08,1,b\n2011-01-08,2,a\n"
      "2011-01-29,1,a\n2011-01-29,2,c\n");
  io::RunConfig cfg;
  cfg.model = "dynamic";
  cfg.phi_mode = "xi";
  cfg.xi = 0.5;
  cfg.iterations = 200;
  cfg.burn_in = 100;
  cfg.seed = 3;
  const PosteriorChain chain = io::fit(d, cfg);
  CHECK(chain.epochs == 3);
  CHECK(chain.epoch_labels[2] == "2011-01-29");
}
