#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "absa/deptree.hpp"
#include "absa/tensor.hpp"

namespace absa::corpus {

enum class Polarity { positive = 0, neutral = 1, negative = 2 };
constexpr int kNumClasses = 3;

const char* polarity_name(Polarity p);
std::optional<Polarity> polarity_from_name(const std::string& s);

struct AspectSpan {
  std::string term;
  int char_from = 0;  // [from, to) in the sentence text
  int char_to = 0;
  Polarity polarity = Polarity::neutral;
};

struct RawSentence {
  std::string id;
  std::string text;
  std::vector<AspectSpan> aspects;
};

// SemEval-2014 Task-4 XML. Aspects labeled "conflict" are dropped; sentences
// left without aspects are dropped. Warnings go to `warnings` when given,
// otherwise to stderr.
std::vector<RawSentence> load_semeval_xml(const std::string& path,
                                          std::vector<std::string>* warnings = nullptr);

// Twitter 3-line record format: sentence with a $T$ placeholder, target,
// label in {-1, 0, 1}.
std::vector<RawSentence> load_twitter(const std::string& path);

// CoNLL-U subset: columns ID, FORM, HEAD, DEPREL; sentences keyed by the
// `# sent_id` comment. Multiword-token and empty-node lines are skipped.
std::map<std::string, DepParse> load_conllu(const std::string& path);

// One (sentence, aspect) pair, training-ready.
struct Instance {
  std::string id;  // sentence id; shared by all aspects of one sentence
  std::vector<std::string> tokens;
  int aspect_from = 0;  // 1-based, inclusive
  int aspect_to = 0;
  Polarity label = Polarity::neutral;
  DepParse parse;
};

// Aligns character-level aspect spans to the parse tokenization. Spans that
// straddle partial tokens are expanded to the covering tokens (with a
// warning); unalignable aspects are skipped.
std::vector<Instance> build_instances(const std::vector<RawSentence>& raw,
                                      const std::map<std::string, DepParse>& parses,
                                      std::vector<std::string>* warnings = nullptr);

// Token -> index map with reserved padding (0) and unknown (1) rows.
class Vocab {
 public:
  static constexpr const char* kPad = "<pad>";
  static constexpr const char* kUnk = "<unk>";

  static Vocab build(const std::vector<Instance>& instances, int min_freq = 1,
                     bool lowercase = true);
  static Vocab from_tokens(std::vector<std::string> tokens, bool lowercase);

  // Applies lowercasing when enabled; unknown tokens map to unk.
  int lookup(const std::string& token) const;
  bool contains(const std::string& token) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  int pad_index() const { return 0; }
  int unk_index() const { return 1; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool lowercase() const { return lowercase_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  bool lowercase_ = true;
};

// Reads a whitespace-separated "token v1..vd" embedding file (an optional
// word2vec-style count/dim header line is skipped). Rows for in-vocab tokens
// are copied; out-of-vocab rows are drawn uniform in [-0.25, 0.25] from the
// seed; the padding row is zero.
nn::Tensor load_embeddings(const std::string& path, const Vocab& vocab, uint64_t seed);

// All-random embedding matrix with the same OOV/pad conventions (no file).
nn::Tensor random_embeddings(const Vocab& vocab, int dim, uint64_t seed);

// Line-delimited JSON instance schema:
// {"id", "tokens":[], "aspect":[i,k], "label", "heads":[], "rels":[]}
void write_instances_jsonl(const std::string& path, const std::vector<Instance>& instances);
std::vector<Instance> read_instances_jsonl(const std::string& path);

// Companion export for the external parser: one "id<TAB>text" line per
// sentence. The parser must echo the id back as `# sent_id = <id>`.
void export_sentences_tsv(const std::string& path, const std::vector<RawSentence>& raw);

}  // namespace absa::corpus
