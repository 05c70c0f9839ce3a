#include "absa/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "absa/error.hpp"
#include "absa/rng.hpp"

using json = nlohmann::json;

namespace absa::corpus {

namespace {

void warn(std::vector<std::string>* sink, const std::string& msg) {
  if (sink)
    sink->push_back(msg);
  else
    std::cerr << "[warn] " << msg << "\n";
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void strip_bom(std::string& s) {
  if (s.size() >= 3 && s.compare(0, 3, "\xEF\xBB\xBF") == 0) s.erase(0, 3);
}

// Collapse runs of whitespace to single spaces and trim, for span checks.
std::string normalize_ws(const std::string& s) {
  std::string out;
  bool in_ws = true;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_ws) out += ' ';
      in_ws = true;
    } else {
      out += c;
      in_ws = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  return in;
}

// ---------------------------------------------------------------------------
// Minimal XML reader, enough for the SemEval task files: elements,
// attributes, character data, comments, declarations, the five named
// entities and numeric character references.
// ---------------------------------------------------------------------------

struct XmlNode {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<XmlNode> children;
  std::string text;  // character data directly inside this element
  int line = 0;

  const std::string* attr(const std::string& key) const {
    for (const auto& [k, v] : attrs)
      if (k == key) return &v;
    return nullptr;
  }
  const XmlNode* child(const std::string& n) const {
    for (const XmlNode& c : children)
      if (c.name == n) return &c;
    return nullptr;
  }
};

class XmlParser {
 public:
  explicit XmlParser(std::string input) : in_(std::move(input)) {}

  XmlNode parse_document() {
    skip_misc();
    if (eof()) fail("no root element");
    XmlNode root = parse_element();
    skip_misc();
    if (!eof()) fail("trailing content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("XML: " + msg, line_);
  }

  bool eof() const { return pos_ >= in_.size(); }
  char peek() const { return in_[pos_]; }
  char get() {
    char c = in_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }
  bool starts_with(const char* s) const {
    return in_.compare(pos_, std::char_traits<char>::length(s), s) == 0;
  }
  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }
  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) get();
  }

  void skip_until(const char* marker) {
    size_t found = in_.find(marker, pos_);
    if (found == std::string::npos) fail(std::string("unterminated '") + marker + "'");
    while (pos_ < found + std::char_traits<char>::length(marker)) get();
  }

  // whitespace, comments, <?...?> declarations
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<!--")) {
        skip_until("-->");
      } else if (starts_with("<?")) {
        skip_until("?>");
      } else {
        return;
      }
    }
  }

  std::string parse_name() {
    std::string n;
    while (!eof()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
          c == ':' || c == '.') {
        n += get();
      } else {
        break;
      }
    }
    if (n.empty()) fail("expected a name");
    return n;
  }

  std::string decode_entities(const std::string& raw) {
    std::string out;
    for (size_t i = 0; i < raw.size();) {
      if (raw[i] != '&') {
        out += raw[i++];
        continue;
      }
      size_t semi = raw.find(';', i);
      if (semi == std::string::npos) fail("unterminated entity");
      std::string ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "lt") out += '<';
      else if (ent == "gt") out += '>';
      else if (ent == "amp") out += '&';
      else if (ent == "quot") out += '"';
      else if (ent == "apos") out += '\'';
      else if (!ent.empty() && ent[0] == '#') {
        int code = 0;
        try {
          code = ent[1] == 'x' || ent[1] == 'X'
                     ? std::stoi(ent.substr(2), nullptr, 16)
                     : std::stoi(ent.substr(1));
        } catch (...) {
          fail("bad character reference &" + ent + ";");
        }
        if (code < 0x80) {
          out += static_cast<char>(code);
        } else if (code < 0x800) {
          out += static_cast<char>(0xC0 | (code >> 6));
          out += static_cast<char>(0x80 | (code & 0x3F));
        } else {
          out += static_cast<char>(0xE0 | (code >> 12));
          out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
          out += static_cast<char>(0x80 | (code & 0x3F));
        }
      } else {
        fail("unknown entity &" + ent + ";");
      }
      i = semi + 1;
    }
    return out;
  }

  XmlNode parse_element() {
    expect('<');
    XmlNode node;
    node.line = line_;
    node.name = parse_name();
    for (;;) {
      skip_ws();
      if (eof()) fail("unterminated start tag <" + node.name);
      if (peek() == '/') {
        get();
        expect('>');
        return node;  // self-closing
      }
      if (peek() == '>') {
        get();
        break;
      }
      std::string key = parse_name();
      skip_ws();
      expect('=');
      skip_ws();
      if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
      char quote = get();
      std::string raw;
      while (!eof() && peek() != quote) raw += get();
      if (eof()) fail("unterminated attribute value");
      get();
      node.attrs.emplace_back(key, decode_entities(raw));
    }
    // content
    std::string raw_text;
    for (;;) {
      if (eof()) fail("unterminated element <" + node.name + ">");
      if (peek() == '<') {
        if (starts_with("</")) {
          get();
          get();
          std::string close = parse_name();
          if (close != node.name)
            fail("mismatched closing tag </" + close + "> for <" + node.name + ">");
          skip_ws();
          expect('>');
          node.text = decode_entities(raw_text);
          return node;
        }
        if (starts_with("<!--")) {
          skip_until("-->");
          continue;
        }
        if (starts_with("<?")) {
          skip_until("?>");
          continue;
        }
        node.children.push_back(parse_element());
      } else {
        raw_text += get();
      }
    }
  }

  std::string in_;
  size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace

const char* polarity_name(Polarity p) {
  switch (p) {
    case Polarity::positive: return "positive";
    case Polarity::neutral: return "neutral";
    case Polarity::negative: return "negative";
  }
  return "?";
}

std::optional<Polarity> polarity_from_name(const std::string& s) {
  if (s == "positive") return Polarity::positive;
  if (s == "neutral") return Polarity::neutral;
  if (s == "negative") return Polarity::negative;
  return std::nullopt;
}

std::vector<RawSentence> load_semeval_xml(const std::string& path,
                                          std::vector<std::string>* warnings) {
  std::ifstream in = open_or_throw(path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string xml = buf.str();
  strip_bom(xml);
  XmlParser parser(std::move(xml));
  XmlNode root = parser.parse_document();

  std::vector<RawSentence> out;
  for (const XmlNode& sent : root.children) {
    if (sent.name != "sentence") continue;
    RawSentence rs;
    const std::string* id = sent.attr("id");
    rs.id = id ? *id : "sentence-" + std::to_string(out.size());
    const XmlNode* text = sent.child("text");
    if (!text) {
      warn(warnings, "sentence " + rs.id + ": missing <text>, skipped");
      continue;
    }
    rs.text = text->text;
    const XmlNode* terms = sent.child("aspectTerms");
    if (terms) {
      for (const XmlNode& at : terms->children) {
        if (at.name != "aspectTerm") continue;
        const std::string* term = at.attr("term");
        const std::string* pol = at.attr("polarity");
        const std::string* from = at.attr("from");
        const std::string* to = at.attr("to");
        if (!term || !pol || !from || !to) {
          warn(warnings, "sentence " + rs.id + ": aspectTerm missing attributes, skipped");
          continue;
        }
        if (*pol == "conflict") continue;  // three-class setup
        auto polarity = polarity_from_name(*pol);
        if (!polarity) {
          warn(warnings, "sentence " + rs.id + ": unknown polarity '" + *pol + "', skipped");
          continue;
        }
        AspectSpan a;
        a.term = *term;
        a.polarity = *polarity;
        try {
          a.char_from = std::stoi(*from);
          a.char_to = std::stoi(*to);
        } catch (...) {
          warn(warnings, "sentence " + rs.id + ": non-numeric span, skipped");
          continue;
        }
        if (a.char_from < 0 || a.char_to > static_cast<int>(rs.text.size()) ||
            a.char_from >= a.char_to) {
          warn(warnings, "sentence " + rs.id + ": span out of bounds, skipped");
          continue;
        }
        std::string slice = rs.text.substr(static_cast<size_t>(a.char_from),
                                           static_cast<size_t>(a.char_to - a.char_from));
        if (normalize_ws(slice) != normalize_ws(a.term)) {
          warn(warnings, "sentence " + rs.id + ": span text '" + slice +
                             "' does not match term '" + a.term + "', skipped");
          continue;
        }
        rs.aspects.push_back(std::move(a));
      }
    }
    if (!rs.aspects.empty()) out.push_back(std::move(rs));
  }
  return out;
}

std::vector<RawSentence> load_twitter(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lines.empty()) strip_bom(line);
    lines.push_back(line);
  }
  // tolerate trailing blank lines
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.size() % 3 != 0)
    throw Error("twitter file " + path + ": line count " + std::to_string(lines.size()) +
                " is not divisible by 3");

  std::vector<RawSentence> out;
  for (size_t r = 0; r + 2 < lines.size() + 1; r += 3) {
    const std::string& raw = lines[r];
    std::string target = trim(lines[r + 1]);
    std::string label = trim(lines[r + 2]);

    Polarity pol;
    if (label == "-1") pol = Polarity::negative;
    else if (label == "0") pol = Polarity::neutral;
    else if (label == "1") pol = Polarity::positive;
    else
      throw ParseError("twitter label '" + label + "' not in {-1, 0, 1}",
                       static_cast<int>(r + 3));

    size_t ph = raw.find("$T$");
    if (ph == std::string::npos)
      throw ParseError("twitter sentence lacks $T$ placeholder", static_cast<int>(r + 1));

    std::string text;
    int char_from = -1;
    for (size_t i = 0; i < raw.size();) {
      if (raw.compare(i, 3, "$T$") == 0) {
        if (char_from < 0) char_from = static_cast<int>(text.size());
        text += target;
        i += 3;
      } else {
        text += raw[i++];
      }
    }

    RawSentence rs;
    rs.id = "twitter-" + std::to_string(r / 3);
    rs.text = std::move(text);
    AspectSpan a;
    a.term = target;
    a.char_from = char_from;
    a.char_to = char_from + static_cast<int>(target.size());
    a.polarity = pol;
    rs.aspects.push_back(std::move(a));
    out.push_back(std::move(rs));
  }
  return out;
}

std::map<std::string, DepParse> load_conllu(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::map<std::string, DepParse> out;

  std::string sent_id;
  DepParse parse;
  int line_no = 0;
  int block_start = 1;

  auto flush = [&](int at_line) {
    if (parse.tokens.empty() && sent_id.empty()) return;
    if (parse.tokens.empty())
      throw ParseError("CoNLL-U block for sentence '" + sent_id + "' has no tokens",
                       block_start);
    if (sent_id.empty())
      throw ParseError("CoNLL-U block missing '# sent_id' comment", block_start);
    if (out.count(sent_id))
      throw ParseError("duplicate sent_id '" + sent_id + "'", at_line);
    if (auto bad = deptree::validate_tree(parse))
      throw Error("CoNLL-U sentence '" + sent_id + "': " + *bad);
    out.emplace(sent_id, std::move(parse));
    parse = DepParse{};
    sent_id.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) strip_bom(line);
    if (trim(line).empty()) {
      flush(line_no);
      block_start = line_no + 1;
      continue;
    }
    if (line[0] == '#') {
      std::string c = trim(line.substr(1));
      if (c.rfind("sent_id", 0) == 0) {
        std::string v = trim(c.substr(7));
        if (!v.empty() && v[0] == '=') v = trim(v.substr(1));
        sent_id = v;
      }
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() < 8)
      throw ParseError("CoNLL-U line has " + std::to_string(cols.size()) +
                           " columns, expected at least 8",
                       line_no);
    const std::string& id_col = cols[0];
    // skip multiword-token ranges (1-2) and empty nodes (1.1)
    if (id_col.find('-') != std::string::npos || id_col.find('.') != std::string::npos)
      continue;
    int tok_id = 0;
    int head = 0;
    try {
      tok_id = std::stoi(id_col);
      head = std::stoi(cols[6]);
    } catch (...) {
      throw ParseError("CoNLL-U: non-numeric ID or HEAD", line_no);
    }
    if (tok_id != static_cast<int>(parse.tokens.size()) + 1)
      throw ParseError("CoNLL-U: token ids not contiguous (got " + id_col + ")", line_no);
    parse.tokens.push_back(cols[1]);
    parse.heads.push_back(head);
    parse.rels.push_back(cols[7]);
  }
  flush(line_no);
  return out;
}

namespace {

// PTB-style token escapes some parsers emit.
const std::pair<const char*, const char*> kPtbEscapes[] = {
    {"-LRB-", "("}, {"-RRB-", ")"}, {"-LSB-", "["}, {"-RSB-", "]"},
    {"-LCB-", "{"}, {"-RCB-", "}"}, {"``", "\""},   {"''", "\""},
};

// Greedy left-to-right alignment of parse tokens onto the sentence text.
// Returns [start, end) char offsets per token, or nullopt on failure.
std::optional<std::vector<std::pair<int, int>>> align_tokens(
    const std::string& text, const std::vector<std::string>& tokens) {
  std::vector<std::pair<int, int>> spans;
  size_t cur = 0;
  for (const std::string& tok : tokens) {
    while (cur < text.size() && std::isspace(static_cast<unsigned char>(text[cur]))) ++cur;
    size_t len = 0;
    if (text.compare(cur, tok.size(), tok) == 0) {
      len = tok.size();
    } else {
      for (const auto& [esc, plain] : kPtbEscapes) {
        if (tok == esc && text.compare(cur, std::string(plain).size(), plain) == 0) {
          len = std::string(plain).size();
          break;
        }
      }
    }
    if (len == 0) return std::nullopt;
    spans.emplace_back(static_cast<int>(cur), static_cast<int>(cur + len));
    cur += len;
  }
  return spans;
}

}  // namespace

std::vector<Instance> build_instances(const std::vector<RawSentence>& raw,
                                      const std::map<std::string, DepParse>& parses,
                                      std::vector<std::string>* warnings) {
  std::vector<Instance> out;
  for (const RawSentence& rs : raw) {
    auto pit = parses.find(rs.id);
    if (pit == parses.end()) {
      warn(warnings, "sentence " + rs.id + ": no parse found, skipped");
      continue;
    }
    const DepParse& parse = pit->second;
    auto spans = align_tokens(rs.text, parse.tokens);
    if (!spans) {
      warn(warnings, "sentence " + rs.id + ": parse tokens do not align to text, skipped");
      continue;
    }
    for (const AspectSpan& a : rs.aspects) {
      int first = -1, last = -1;
      for (size_t t = 0; t < spans->size(); ++t) {
        auto [s, e] = (*spans)[t];
        if (s < a.char_to && e > a.char_from) {
          if (first < 0) first = static_cast<int>(t);
          last = static_cast<int>(t);
        }
      }
      if (first < 0) {
        warn(warnings, "sentence " + rs.id + ": aspect '" + a.term +
                           "' does not align to any token, skipped");
        continue;
      }
      if ((*spans)[static_cast<size_t>(first)].first != a.char_from ||
          (*spans)[static_cast<size_t>(last)].second != a.char_to) {
        warn(warnings, "sentence " + rs.id + ": aspect '" + a.term +
                           "' expanded to covering tokens");
      }
      Instance inst;
      inst.id = rs.id;
      inst.tokens = parse.tokens;
      inst.aspect_from = first + 1;
      inst.aspect_to = last + 1;
      inst.label = a.polarity;
      inst.parse = parse;
      out.push_back(std::move(inst));
    }
  }
  return out;
}

Vocab Vocab::build(const std::vector<Instance>& instances, int min_freq, bool lowercase) {
  std::map<std::string, long> freq;
  for (const Instance& inst : instances) {
    for (const std::string& tok : inst.tokens) {
      std::string t = tok;
      if (lowercase)
        std::transform(t.begin(), t.end(), t.begin(),
                       [](unsigned char c) { return std::tolower(c); });
      ++freq[t];
    }
  }
  std::vector<std::pair<std::string, long>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> toks{kPad, kUnk};
  for (const auto& [t, f] : items)
    if (f >= min_freq) toks.push_back(t);
  return from_tokens(std::move(toks), lowercase);
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens, bool lowercase) {
  Vocab v;
  v.lowercase_ = lowercase;
  v.tokens_ = std::move(tokens);
  if (v.tokens_.size() < 2 || v.tokens_[0] != kPad || v.tokens_[1] != kUnk)
    throw Error("vocab must start with the reserved <pad> and <unk> tokens");
  for (size_t i = 0; i < v.tokens_.size(); ++i) v.index_[v.tokens_[i]] = static_cast<int>(i);
  return v;
}

int Vocab::lookup(const std::string& token) const {
  std::string t = token;
  if (lowercase_)
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return std::tolower(c); });
  auto it = index_.find(t);
  return it == index_.end() ? unk_index() : it->second;
}

bool Vocab::contains(const std::string& token) const {
  std::string t = token;
  if (lowercase_)
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return std::tolower(c); });
  return index_.count(t) > 0;
}

nn::Tensor load_embeddings(const std::string& path, const Vocab& vocab, uint64_t seed) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  int dim = -1;
  std::vector<std::vector<double>> rows(static_cast<size_t>(vocab.size()));
  std::vector<bool> filled(static_cast<size_t>(vocab.size()), false);
  int line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) strip_bom(line);
    if (trim(line).empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (first) {
      first = false;
      // word2vec-style "count dim" header
      std::string rest;
      double maybe_dim;
      if (!tok.empty() && std::isdigit(static_cast<unsigned char>(tok[0])) &&
          (ss >> maybe_dim) && !(ss >> rest)) {
        continue;
      }
      ss.clear();
      ss.str(line);
      ss >> tok;
    }
    std::vector<double> vec;
    double v;
    while (ss >> v) vec.push_back(v);
    if (vec.empty()) throw ParseError("embedding line has no values", line_no);
    if (dim < 0) dim = static_cast<int>(vec.size());
    if (static_cast<int>(vec.size()) != dim)
      throw ParseError("inconsistent embedding dimension: expected " + std::to_string(dim) +
                           ", got " + std::to_string(vec.size()),
                       line_no);
    int idx = -1;
    if (vocab.contains(tok)) idx = vocab.lookup(tok);
    if (idx <= 1) continue;  // pad/unk rows stay synthetic
    if (!filled[static_cast<size_t>(idx)]) {  // first file occurrence wins
      rows[static_cast<size_t>(idx)] = std::move(vec);
      filled[static_cast<size_t>(idx)] = true;
    }
  }
  if (dim < 0) throw Error("embedding file " + path + " has no vectors");

  nn::Tensor mat = nn::Tensor::zeros({vocab.size(), dim});
  Rng rng(seed);
  for (int r = 0; r < vocab.size(); ++r) {
    if (r == vocab.pad_index()) continue;  // zero row
    if (filled[static_cast<size_t>(r)]) {
      for (int c = 0; c < dim; ++c) mat.at(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)];
    } else {
      for (int c = 0; c < dim; ++c) mat.at(r, c) = rng.uniform(-0.25, 0.25);
    }
  }
  return mat;
}

nn::Tensor random_embeddings(const Vocab& vocab, int dim, uint64_t seed) {
  nn::Tensor mat = nn::Tensor::zeros({vocab.size(), dim});
  Rng rng(seed);
  for (int r = 1; r < vocab.size(); ++r)
    for (int c = 0; c < dim; ++c) mat.at(r, c) = rng.uniform(-0.25, 0.25);
  return mat;
}

void write_instances_jsonl(const std::string& path, const std::vector<Instance>& instances) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  for (const Instance& inst : instances) {
    json j;
    j["id"] = inst.id;
    j["tokens"] = inst.tokens;
    j["aspect"] = {inst.aspect_from, inst.aspect_to};
    j["label"] = polarity_name(inst.label);
    j["heads"] = inst.parse.heads;
    j["rels"] = inst.parse.rels;
    out << j.dump() << "\n";
  }
}

std::vector<Instance> read_instances_jsonl(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<Instance> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad JSONL instance: ") + e.what(), line_no);
    }
    Instance inst;
    try {
      inst.id = j.at("id").get<std::string>();
      inst.tokens = j.at("tokens").get<std::vector<std::string>>();
      inst.aspect_from = j.at("aspect").at(0).get<int>();
      inst.aspect_to = j.at("aspect").at(1).get<int>();
      auto pol = polarity_from_name(j.at("label").get<std::string>());
      if (!pol) throw Error("unknown label");
      inst.label = *pol;
      inst.parse.tokens = inst.tokens;
      inst.parse.heads = j.at("heads").get<std::vector<int>>();
      inst.parse.rels = j.at("rels").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad JSONL instance: ") + e.what(), line_no);
    }
    if (inst.parse.heads.size() != inst.tokens.size() ||
        inst.parse.rels.size() != inst.tokens.size())
      throw ParseError("JSONL instance: tokens/heads/rels length mismatch", line_no);
    if (inst.aspect_from < 1 || inst.aspect_to > static_cast<int>(inst.tokens.size()) ||
        inst.aspect_from > inst.aspect_to)
      throw ParseError("JSONL instance: aspect span out of range", line_no);
    if (auto bad = deptree::validate_tree(inst.parse))
      throw ParseError("JSONL instance '" + inst.id + "': " + *bad, line_no);
    out.push_back(std::move(inst));
  }
  return out;
}

void export_sentences_tsv(const std::string& path, const std::vector<RawSentence>& raw) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  for (const RawSentence& rs : raw) out << rs.id << "\t" << rs.text << "\n";
}

}  // namespace absa::corpus
