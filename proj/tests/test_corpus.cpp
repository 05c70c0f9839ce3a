#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "absa/corpus.hpp"
#include "absa/error.hpp"
#include "support/test_util.hpp"

using namespace absa;
namespace corpus = absa::corpus;
namespace fs = std::filesystem;

namespace {

const std::string kData = TESTDATA_DIR;

std::string write_temp(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / name;
  std::ofstream(p) << content;
  return p.string();
}

}  // namespace

TEST_CASE("semeval loader: conflict dropped, empty sentences dropped, spans checked") {
  std::vector<std::string> warnings;
  auto raw = corpus::load_semeval_xml(kData + "/mini_restaurants.xml", &warnings);

  REQUIRE(raw.size() == 2);  // s2 (no aspects) and s4 (bad span) are gone
  CHECK(raw[0].id == "s1");
  CHECK(raw[0].text == "great food but the service was dreadful");
  REQUIRE(raw[0].aspects.size() == 2);
  CHECK(raw[0].aspects[0].term == "food");
  CHECK(raw[0].aspects[0].char_from == 6);
  CHECK(raw[0].aspects[0].char_to == 10);
  CHECK(raw[0].aspects[0].polarity == corpus::Polarity::positive);
  CHECK(raw[0].aspects[1].polarity == corpus::Polarity::negative);

  // entity decoding in both text and attributes; the conflict aspect is gone
  CHECK(raw[1].id == "s3");
  CHECK(raw[1].text == "The \"mac\" runs fine but gets hot");
  REQUIRE(raw[1].aspects.size() == 1);
  CHECK(raw[1].aspects[0].term == "\"mac\"");

  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("s4") != std::string::npos);
}

TEST_CASE("semeval loader: malformed XML reports the line") {
  std::string path = write_temp("bad.xml",
                                "<sentences>\n<sentence id=\"x\">\n<text>hi</tex>\n"
                                "</sentence>\n</sentences>\n");
  try {
    corpus::load_semeval_xml(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line >= 3);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("twitter loader: placeholder substitution and label mapping") {
  auto raw = corpus::load_twitter(kData + "/mini_twitter.txt");
  REQUIRE(raw.size() == 3);
  CHECK(raw[0].text == "i love nlp so much");
  REQUIRE(raw[0].aspects.size() == 1);
  CHECK(raw[0].aspects[0].char_from == 7);
  CHECK(raw[0].aspects[0].char_to == 10);
  CHECK(raw[0].aspects[0].polarity == corpus::Polarity::positive);
  CHECK(raw[1].aspects[0].polarity == corpus::Polarity::negative);
  CHECK(raw[1].aspects[0].char_from == 0);
  CHECK(raw[2].aspects[0].polarity == corpus::Polarity::neutral);
}

TEST_CASE("loaders tolerate a UTF-8 byte order mark") {
  std::string xml = write_temp("bom.xml",
                               "\xEF\xBB\xBF<sentences><sentence id=\"b1\">"
                               "<text>nice cake</text><aspectTerms>"
                               "<aspectTerm term=\"cake\" polarity=\"positive\" "
                               "from=\"5\" to=\"9\"/></aspectTerms></sentence></sentences>");
  auto raw = corpus::load_semeval_xml(xml);
  REQUIRE(raw.size() == 1);
  CHECK(raw[0].text == "nice cake");
  std::remove(xml.c_str());

  std::string tw = write_temp("bom_tw.txt", "\xEF\xBB\xBF$T$ is fine\nit\n0\n");
  auto tw_raw = corpus::load_twitter(tw);
  REQUIRE(tw_raw.size() == 1);
  CHECK(tw_raw[0].aspects[0].char_from == 0);
  std::remove(tw.c_str());

  std::string conllu = write_temp(
      "bom.conllu", "\xEF\xBB\xBF# sent_id = b1\n1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n");
  auto parses = corpus::load_conllu(conllu);
  CHECK(parses.count("b1") == 1);
  std::remove(conllu.c_str());
}

TEST_CASE("twitter loader: malformed files") {
  CHECK_THROWS_AS(corpus::load_twitter(kData + "/bad_twitter.txt"), Error);
  std::string bad_label = write_temp("twl.txt", "a $T$ b\nx\n7\n");
  CHECK_THROWS_AS(corpus::load_twitter(bad_label), ParseError);
  std::remove(bad_label.c_str());
}

TEST_CASE("conllu loader: ids, token skipping, validation") {
  auto parses = corpus::load_conllu(kData + "/mini.conllu");
  REQUIRE(parses.size() == 2);
  const DepParse& s1 = parses.at("s1");
  CHECK(s1.size() == 7);
  CHECK(s1.tokens[1] == "food");
  CHECK(s1.heads[1] == 0);
  CHECK(s1.rels[0] == "amod");
  // multiword range and empty-node lines skipped
  const DepParse& s3 = parses.at("s3");
  CHECK(s3.size() == 9);
  CHECK(s3.tokens[2] == "mac");

  CHECK_THROWS_WITH_AS(corpus::load_conllu(kData + "/bad_cycle.conllu"),
                       doctest::Contains("bad1"), Error);
  CHECK_THROWS_WITH_AS(corpus::load_conllu(kData + "/missing_id.conllu"),
                       doctest::Contains("sent_id"), Error);
}

TEST_CASE("build_instances: char spans map to covering token ranges") {
  auto raw = corpus::load_semeval_xml(kData + "/mini_restaurants.xml");
  auto parses = corpus::load_conllu(kData + "/mini.conllu");
  std::vector<std::string> warnings;
  auto instances = corpus::build_instances(raw, parses, &warnings);

  REQUIRE(instances.size() == 3);
  // two aspects of s1 share one parse
  CHECK(instances[0].id == "s1");
  CHECK(instances[1].id == "s1");
  CHECK(instances[0].aspect_from == 2);
  CHECK(instances[0].aspect_to == 2);
  CHECK(instances[1].aspect_from == 5);
  CHECK(instances[1].aspect_to == 5);
  CHECK(instances[0].parse.heads == instances[1].parse.heads);

  // multiword aspect across PTB-escaped quote tokens
  CHECK(instances[2].id == "s3");
  CHECK(instances[2].aspect_from == 2);
  CHECK(instances[2].aspect_to == 4);
  CHECK(warnings.empty());

  // token-span text matches the aspect term modulo whitespace
  std::string joined;
  for (int t = instances[0].aspect_from; t <= instances[0].aspect_to; ++t)
    joined += instances[0].tokens[static_cast<size_t>(t - 1)];
  CHECK(joined == "food");
}

TEST_CASE("build_instances: partial-token span expands with a warning") {
  corpus::RawSentence rs;
  rs.id = "p1";
  rs.text = "great food";
  rs.aspects.push_back({"oo", 7, 9, corpus::Polarity::neutral});  // inside "food"
  DepParse p;
  p.tokens = {"great", "food"};
  p.heads = {2, 0};
  p.rels = {"amod", "root"};
  std::vector<std::string> warnings;
  auto instances = corpus::build_instances({rs}, {{"p1", p}}, &warnings);
  REQUIRE(instances.size() == 1);
  CHECK(instances[0].aspect_from == 2);
  CHECK(instances[0].aspect_to == 2);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("expanded") != std::string::npos);
}

TEST_CASE("build_instances: missing parse and unalignable tokens are skipped") {
  corpus::RawSentence rs;
  rs.id = "q1";
  rs.text = "totally different text";
  rs.aspects.push_back({"totally", 0, 7, corpus::Polarity::positive});
  DepParse p;
  p.tokens = {"no", "match"};
  p.heads = {2, 0};
  p.rels = {"dep", "root"};
  std::vector<std::string> warnings;
  auto none = corpus::build_instances({rs}, {}, &warnings);
  CHECK(none.empty());
  auto misaligned = corpus::build_instances({rs}, {{"q1", p}}, &warnings);
  CHECK(misaligned.empty());
  CHECK(warnings.size() == 2);
}

TEST_CASE("vocab: reserved rows, frequency order, lowercasing") {
  auto instances = testutil::make_synthetic(6);
  corpus::Vocab v = corpus::Vocab::build(instances, 1, true);
  CHECK(v.tokens()[0] == corpus::Vocab::kPad);
  CHECK(v.tokens()[1] == corpus::Vocab::kUnk);
  CHECK(v.lookup("the") >= 2);
  CHECK(v.lookup("THE") == v.lookup("the"));
  CHECK(v.lookup("never-seen-token") == v.unk_index());
  // most frequent tokens come first
  CHECK(v.lookup("the") < v.lookup("fantastic"));

  corpus::Vocab v2 = corpus::Vocab::build(instances, 1, true);
  CHECK(v.tokens() == v2.tokens());
}

TEST_CASE("vocab: min_freq cuts rare tokens to unk") {
  auto instances = testutil::make_synthetic(6);
  // "the"/"thing"/"was" appear 6x, each filler once or twice
  corpus::Vocab v = corpus::Vocab::build(instances, 3, true);
  CHECK(v.lookup("the") != v.unk_index());
  CHECK(v.lookup("today") == v.unk_index());
}

TEST_CASE("embeddings: word2vec-style header line is skipped") {
  std::string path = write_temp("hdr_glove.txt", "2 3\na 1 2 3\nb 4 5 6\n");
  corpus::Vocab v = corpus::Vocab::from_tokens(
      {corpus::Vocab::kPad, corpus::Vocab::kUnk, "a", "b"}, true);
  nn::Tensor m = corpus::load_embeddings(path, v, 1);
  CHECK(m.cols() == 3);
  CHECK(m.at(2, 0) == 1.0);
  CHECK(m.at(3, 2) == 6.0);
  std::remove(path.c_str());
}

TEST_CASE("embeddings: file rows copied exactly, OOV rows bounded, pad zero") {
  auto instances = testutil::make_synthetic(3);
  // vocab contains "the", "thing", ... ; file contains "the", "Apple", ...
  corpus::Vocab v = corpus::Vocab::build(instances, 1, true);
  nn::Tensor m = corpus::load_embeddings(kData + "/mini_glove.txt", v, 7);
  CHECK(m.rows() == v.size());
  CHECK(m.cols() == 4);
  int the = v.lookup("the");
  CHECK(m.at(the, 0) == 0.1);
  CHECK(m.at(the, 3) == 0.4);
  for (int c = 0; c < 4; ++c) CHECK(m.at(v.pad_index(), c) == 0.0);
  int thing = v.lookup("thing");  // not in the file
  for (int c = 0; c < 4; ++c) {
    CHECK(m.at(thing, c) >= -0.25);
    CHECK(m.at(thing, c) <= 0.25);
  }

  nn::Tensor m2 = corpus::load_embeddings(kData + "/mini_glove.txt", v, 7);
  CHECK(m.data == m2.data);  // same seed, same bytes
  nn::Tensor m3 = corpus::load_embeddings(kData + "/mini_glove.txt", v, 8);
  CHECK(m.data != m3.data);
}

TEST_CASE("embeddings: cased file rows fall back to the lowercased vocab entry") {
  std::vector<std::string> toks{corpus::Vocab::kPad, corpus::Vocab::kUnk, "apple"};
  corpus::Vocab v = corpus::Vocab::from_tokens(toks, true);
  nn::Tensor m = corpus::load_embeddings(kData + "/mini_glove.txt", v, 1);
  CHECK(m.at(2, 0) == 0.9);  // row of "Apple"
}

TEST_CASE("embeddings: inconsistent dimension raises with line number") {
  std::string path = write_temp("bad_glove.txt", "a 1 2 3\nb 1 2\n");
  CHECK_THROWS_AS(corpus::load_embeddings(
                      path,
                      corpus::Vocab::from_tokens(
                          {corpus::Vocab::kPad, corpus::Vocab::kUnk, "a"}, true),
                      1),
                  ParseError);
  std::remove(path.c_str());
}

TEST_CASE("instances JSONL round trip") {
  auto instances = testutil::make_synthetic(5);
  fs::path path = fs::temp_directory_path() / "absa_instances.jsonl";
  corpus::write_instances_jsonl(path.string(), instances);
  auto back = corpus::read_instances_jsonl(path.string());
  REQUIRE(back.size() == instances.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == instances[i].id);
    CHECK(back[i].tokens == instances[i].tokens);
    CHECK(back[i].aspect_from == instances[i].aspect_from);
    CHECK(back[i].aspect_to == instances[i].aspect_to);
    CHECK(back[i].label == instances[i].label);
    CHECK(back[i].parse.heads == instances[i].parse.heads);
    CHECK(back[i].parse.rels == instances[i].parse.rels);
  }
  fs::remove(path);
}

TEST_CASE("sentence export for the external parser") {
  auto raw = corpus::load_semeval_xml(kData + "/mini_restaurants.xml");
  fs::path path = fs::temp_directory_path() / "absa_export.tsv";
  corpus::export_sentences_tsv(path.string(), raw);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "s1\tgreat food but the service was dreadful");
  fs::remove(path);
}
