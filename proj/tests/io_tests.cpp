#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ecvr/attributed_io.hpp"
#include "ecvr/checkpoint.hpp"
#include "ecvr/event_io.hpp"
#include "ecvr/sim.hpp"
#include "support/test_util.hpp"

using namespace ecvr;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<ClickEvent> sample_events() {
  SimConfig c;
  c.num_fields = 3;
  c.cardinality_per_field = 7;
  c.horizon_days = 2;
  c.clicks_per_day = 400;
  c.target_cvr = 0.3;
  c.target_rfr = 0.4;
  c.seed = 21;
  return simulate(build_ground_truth(c));
}

WindowConfig windows22() {
  WindowConfig wc;
  wc.conversion = day_window(3);
  wc.refund = day_window(3);
  wc.conversion_steps = {day_window(1), day_window(2)};
  wc.refund_steps = {day_window(1), day_window(2)};
  return wc;
}

}  // namespace

TEST_CASE("event file round-trips exactly", "[io]") {
  const auto events = sample_events();
  const DatasetMeta meta{3, 7, 2, 21};
  const std::string path = temp_path("ecvr_events_roundtrip.txt");
  write_events(path, meta, events);
  const EventDataset back = read_events(path);

  REQUIRE(back.events.size() == events.size());
  CHECK(back.meta.num_fields == 3);
  CHECK(back.meta.cardinality == 7);
  CHECK(back.meta.seed == 21);
  for (std::size_t i = 0; i < events.size(); ++i) {
    CHECK(back.events[i].click_time == events[i].click_time);  // %.17g: bit-exact
    CHECK(back.events[i].conversion_delay == events[i].conversion_delay);
    CHECK(back.events[i].refund_delay == events[i].refund_delay);
    CHECK(back.events[i].features == events[i].features);
  }
}

TEST_CASE("event parser rejects malformed lines with line numbers", "[io]") {
  const std::string path = temp_path("ecvr_events_bad.txt");
  auto write_and_read = [&](const std::string& body) {
    std::ofstream os(path);
    os << "#ecvr-events v1\n#meta num_fields=2 cardinality=5 horizon_days=1 seed=0\n" << body;
    os.close();
    return read_events(path);
  };

  SECTION("bad number") {
    try {
      write_and_read("0.5 inf inf 0:1 1:2\nx.y inf inf 0:1 1:2\n");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
  }

  SECTION("index out of range") {
    CHECK_THROWS_AS(write_and_read("0.5 inf inf 0:1 1:9\n"), DataError);
  }

  SECTION("refund without conversion") {
    CHECK_THROWS_AS(write_and_read("0.5 inf 2.0 0:1 1:2\n"), DataError);
  }

  SECTION("wrong feature count") {
    CHECK_THROWS_AS(write_and_read("0.5 inf inf 0:1\n"), DataError);
  }

  SECTION("missing version line") {
    std::ofstream os(path);
    os << "#meta num_fields=2 cardinality=5 horizon_days=1 seed=0\n";
    os.close();
    CHECK_THROWS_AS(read_events(path), DataError);
  }
}

TEST_CASE("attributed file round-trips labels, masks and the window config", "[io]") {
  const auto events = sample_events();
  const WindowConfig wc = windows22();
  const DatasetMeta meta{3, 7, 2, 21};
  AttributedDataset ds = attribute_all(events, 1.5, wc, meta);
  REQUIRE(!ds.samples.empty());
  // clicks past the cutoff were skipped
  CHECK(ds.samples.size() < events.size());

  const std::string path = temp_path("ecvr_attr_roundtrip.txt");
  write_attributed(path, ds);
  const AttributedDataset back = read_attributed(path);

  CHECK(back.cutoff == 1.5);
  CHECK(window_spec(back.windows) == window_spec(wc));
  REQUIRE(back.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].label_bits == ds.samples[i].label_bits);
    CHECK(back.samples[i].mask_bits == ds.samples[i].mask_bits);
    CHECK(back.samples[i].event.click_time == ds.samples[i].event.click_time);
    CHECK(back.samples[i].event.conversion_delay == ds.samples[i].event.conversion_delay);
  }

  SECTION("infinite cutoff round-trips") {
    AttributedDataset oracle = attribute_all(events, kInf, wc, meta);
    write_attributed(path, oracle);
    CHECK(std::isinf(read_attributed(path).cutoff));
  }

  SECTION("mask bits beyond the layout rejected") {
    std::ifstream is(path);
    std::string all((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    is.close();
    const auto at = all.rfind(" 0:");
    REQUIRE(at != std::string::npos);
    // splice an implausible mask value into the last record
    const auto mask_start = all.rfind(' ', all.rfind(' ', at - 1) - 1);
    std::string corrupted = all.substr(0, mask_start) + " ffffffffffffffff" + all.substr(at);
    std::ofstream os(path);
    os << corrupted;
    os.close();
    CHECK_THROWS_AS(read_attributed(path), DataError);
  }
}

TEST_CASE("checkpoint round-trip is bit-exact", "[io][checkpoint]") {
  const WindowConfig wc = windows22();
  const NetSizes sizes{4, {8, 6}, {5}};
  Rng rng(909);
  TrainedModel model = build_model(ModelVariant::EcadLite, wc, sizes, 3, 7, 404);
  for (auto& b : model.bundles) test::randomize_params(b, rng);

  const std::string path = temp_path("ecvr_ckpt_roundtrip.bin");
  save_checkpoint(model, "[test]\nkey = value\n", path);
  LoadedCheckpoint back = load_checkpoint(path);

  CHECK(back.model.variant == ModelVariant::EcadLite);
  CHECK(back.config_echo == "[test]\nkey = value\n");
  CHECK(window_spec(back.model.windows) == window_spec(wc));
  REQUIRE(back.model.bundles.size() == model.bundles.size());
  auto orig = model.bundles[0].params();
  auto loaded = back.model.bundles[0].params();
  REQUIRE(orig.size() == loaded.size());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    CHECK(orig[i]->name == loaded[i]->name);
    CHECK(orig[i]->shape == loaded[i]->shape);
    CHECK(orig[i]->values == loaded[i]->values);  // exact doubles
  }

  SECTION("predictions survive the round trip bit-for-bit") {
    const std::vector<Feature> f{{0, 6}, {1, 0}, {2, 3}};
    CHECK(predict(model, f, Task::Ecvr) == predict(back.model, f, Task::Ecvr));
  }

  SECTION("two-bundle models round-trip") {
    TrainedModel im = build_model(ModelVariant::ImDefer, wc, sizes, 3, 7, 404);
    save_checkpoint(im, "", path);
    CHECK(load_checkpoint(path).model.bundles.size() == 2);
  }

  SECTION("truncation detected") {
    std::error_code ec;
    std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2, ec);
    REQUIRE(!ec);
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
  }

  SECTION("bad magic detected") {
    std::ofstream os(path, std::ios::binary);
    os << "NOTACKPT";
    os.close();
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
  }
}
