#include <doctest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "sabia/corpus.hpp"
#include "sabia/error.hpp"
#include "temp_dir.hpp"

using namespace sabia;
using sabia::test::TempDir;

namespace {

SourceDocument doc_of(std::string text, std::string id = "doc.md") {
  SourceDocument d;
  d.doc_id = std::move(id);
  d.text = std::move(text);
  return d;
}

}  // namespace

TEST_CASE("load_corpus returns matching files in relative path order") {
  TempDir dir;
  dir.write("b.md", "# Estágio\nRegras do estágio.");
  dir.write("a.md", "Regulamento de TCC.");
  dir.write("notes.bin", "ignored");
  const auto load = load_corpus(dir.path(), {"*.md"});
  REQUIRE(load.documents.size() == 2);
  CHECK(load.errors.empty());
  CHECK(load.documents[0].doc_id == "a.md");
  CHECK(load.documents[1].doc_id == "b.md");
  CHECK(load.documents[1].title == "Estágio");
  CHECK(load.documents[0].title == "a");
  CHECK(load.documents[0].digest.size() == 64);
}

TEST_CASE("load_corpus on an empty directory returns nothing") {
  TempDir dir;
  const auto load = load_corpus(dir.path(), {"*.md"});
  CHECK(load.documents.empty());
  CHECK(load.errors.empty());
}

TEST_CASE("load_corpus uses slash-separated relative ids for nested files") {
  TempDir dir;
  dir.write("regulamentos/tcc/geral.md", "Texto.");
  const auto load = load_corpus(dir.path(), {"*.md"});
  REQUIRE(load.documents.size() == 1);
  CHECK(load.documents[0].doc_id == "regulamentos/tcc/geral.md");
}

TEST_CASE("a byte-order mark is stripped and nothing else changes") {
  TempDir dir;
  const std::string body = "Prazo de matrícula: 10 dias.\r\nFim.";
  dir.write("bom.md", "\xEF\xBB\xBF" + body);
  const auto load = load_corpus(dir.path(), {"*.md"});
  REQUIRE(load.documents.size() == 1);
  CHECK(load.documents[0].text == body);
  // Digest covers the raw file bytes, BOM included.
  CHECK(load.documents[0].digest == sha256_hex("\xEF\xBB\xBF" + body));
}

TEST_CASE("blank, invalid and unreadable files become per-file errors") {
  TempDir dir;
  dir.write("ok.md", "conteúdo");
  dir.write("blank.md", "  \n\t ");
  dir.write("latin1.md", std::string("matr\xED" "cula"));
  std::filesystem::create_symlink(dir / "missing-target.md", dir / "dangling.md");
  const auto load = load_corpus(dir.path(), {"*.md"});
  REQUIRE(load.documents.size() == 1);
  CHECK(load.documents[0].doc_id == "ok.md");
  REQUIRE(load.errors.size() == 3);
  for (const auto& e : load.errors) {
    CHECK_FALSE(e.message.empty());
    CHECK_FALSE(e.path.empty());
  }
}

TEST_CASE("load_corpus rejects a missing root") {
  TempDir dir;
  CHECK_THROWS_AS(load_corpus(dir / "nope", {"*.md"}), IoError);
}

TEST_CASE("sha256_hex matches a known digest") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("short text fits one chunk") {
  const auto doc = doc_of(std::string(500, 'x'));
  const auto chunks = chunk_text(doc, {1000, 200});
  REQUIRE(chunks.size() == 1);
  CHECK(chunks[0].span == CharSpan{0, 500});
  CHECK(chunks[0].text == doc.text);
}

TEST_CASE("chunk_text preconditions") {
  CHECK_THROWS_AS(chunk_text(doc_of(""), {}), ConfigError);
  CHECK_THROWS_AS(chunk_text(doc_of("abc"), {200, 200}), ConfigError);
  CHECK_THROWS_AS(chunk_text(doc_of("abc"), {100, 300}), ConfigError);
}

TEST_CASE("2500-character text is covered without gaps") {
  std::string text;
  std::mt19937 rng(7);
  while (text.size() < 2500) {
    text += "palavra";
    text += (rng() % 9 == 0) ? ". " : " ";
  }
  text.resize(2500);
  const auto doc = doc_of(text);
  const ChunkOptions opt{1000, 200};
  const auto chunks = chunk_text(doc, opt);
  CHECK(chunks.size() >= 3);
  CHECK(sabia::test::chunk_violation(doc, chunks, opt).empty());
}

TEST_CASE("cuts prefer paragraph breaks over sentence ends") {
  const std::string para(600, 'a');
  const std::string text = para + "\n\n" + std::string(300, 'b') + ". " + std::string(400, 'c');
  const auto chunks = chunk_text(doc_of(text), {1000, 100});
  REQUIRE(chunks.size() >= 2);
  CHECK(chunks[0].span.end == 602);
}

TEST_CASE("hard cut when no separator exists") {
  const auto chunks = chunk_text(doc_of(std::string(2500, 'z')), {1000, 200});
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0].span == CharSpan{0, 1000});
  CHECK(chunks[1].span == CharSpan{800, 1800});
  CHECK(chunks[2].span == CharSpan{1600, 2500});
}

TEST_CASE("chunk sizes are counted in code points") {
  std::string text;
  for (int i = 0; i < 1500; ++i) text += "ã";
  const auto doc = doc_of(text);
  const ChunkOptions opt{1000, 200};
  const auto chunks = chunk_text(doc, opt);
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].span == CharSpan{0, 1000});
  CHECK(sabia::test::chunk_violation(doc, chunks, opt).empty());
}

TEST_CASE("chunking is deterministic") {
  const auto doc = doc_of(std::string(3000, 'q') + " fim");
  CHECK(chunk_text(doc, {700, 50}) == chunk_text(doc, {700, 50}));
}
