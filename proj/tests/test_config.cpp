#include <doctest.h>

#include <cstdlib>

#include "amrgen/config.hpp"

using namespace amrgen;

TEST_CASE("key value parsing") {
  const auto kv = parse_key_values("# run\nk = 4\n  beam=5   # wide\n\ndecoder = joint\n");
  CHECK(kv.size() == 3);
  CHECK(kv.at("k") == "4");
  CHECK(kv.at("beam") == "5");
  CHECK(kv.at("decoder") == "joint");
  CHECK_THROWS_AS(parse_key_values("k 4\n"), std::invalid_argument);
}

TEST_CASE("settings apply and validate") {
  RunConfig c;
  for (const auto& [k, v] : parse_key_values("k=2\nhidden=64\nembed-dim=16\nedge-dim=8\nenc-steps=1\n"
                                             "len-reward=0.25\nepochs=7\nlr=0.01\nseed=9\ndecoder=joint\n"
                                             "corpus=train.corpus\nout=bins.csv\n"))
    apply_setting(c, k, v);
  CHECK(c.k == 2);
  CHECK(c.len_reward == 0.25);
  CHECK(c.lr == 0.01);
  CHECK(c.seed == 9);
  CHECK(c.corpus == "train.corpus");
  const ModelConfig m = c.model_config();
  CHECK(m.hidden == 64);
  CHECK(m.embed == 16);
  CHECK(m.edge_dim == 8);
  CHECK(m.enc_steps == 1);
  CHECK(m.cache == 2);
  CHECK(m.decoder == DecoderKind::Joint);
  CHECK(m.seed == 9);

  CHECK_THROWS_AS(apply_setting(c, "colour", "red"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(c, "k", "0"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(c, "beam", "wide"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(c, "hidden", "12abc"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(c, "decoder", "seq2seq"), std::invalid_argument);
}

TEST_CASE("decoder names round trip") {
  for (DecoderKind k : {DecoderKind::Conditioned, DecoderKind::Joint}) CHECK(parse_decoder_kind(to_string(k)) == k);
}

TEST_CASE("data root resolves relative paths") {
  ::setenv("AMRGEN_DATA_ROOT", "/srv/amr", 1);
  CHECK(resolve_data_path("dev.corpus") == std::filesystem::path("/srv/amr/dev.corpus"));
  CHECK(resolve_data_path("/abs/dev.corpus") == std::filesystem::path("/abs/dev.corpus"));
  ::unsetenv("AMRGEN_DATA_ROOT");
  CHECK(resolve_data_path("dev.corpus") == std::filesystem::path("dev.corpus"));
}
