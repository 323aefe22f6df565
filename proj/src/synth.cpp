#include "factgraph/synth.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "factgraph/rng.hpp"

namespace factgraph {

namespace {

struct Verb {
  const char* base;
  const char* past;
  const char* frame;
};

const std::vector<std::pair<const char*, char>>& names() {
  static const std::vector<std::pair<const char*, char>> v = {
      {"Maria", 'f'},  {"Sofia", 'f'},  {"Elena", 'f'}, {"Lucia", 'f'},
      {"Anna", 'f'},   {"Clara", 'f'},  {"Nora", 'f'},  {"Irene", 'f'},
      {"Carlos", 'm'}, {"Daniel", 'm'}, {"Tomas", 'm'}, {"Pedro", 'm'},
      {"Victor", 'm'}, {"Martin", 'm'}, {"Oscar", 'm'}, {"Felix", 'm'}};
  return v;
}

const std::vector<const char*>& cities() {
  static const std::vector<const char*> v = {
      "Paris",  "Madrid", "Lisbon", "Berlin", "Vienna",
      "Prague", "Dublin", "Oslo",   "Geneva", "Warsaw"};
  return v;
}

const std::vector<Verb>& object_verbs() {
  static const std::vector<Verb> v = {
      {"buy", "bought", "buy-01"},       {"sell", "sold", "sell-01"},
      {"paint", "painted", "paint-02"},  {"write", "wrote", "write-01"},
      {"find", "found", "find-01"},      {"lose", "lost", "lose-01"},
      {"borrow", "borrowed", "borrow-01"},
      {"repair", "repaired", "repair-01"}};
  return v;
}

const std::vector<Verb>& person_verbs() {
  static const std::vector<Verb> v = {{"meet", "met", "meet-02"},
                                      {"visit", "visited", "visit-01"},
                                      {"help", "helped", "help-01"},
                                      {"call", "called", "call-02"}};
  return v;
}

const std::vector<const char*>& nouns() {
  static const std::vector<const char*> v = {
      "book",   "house",   "painting", "letter", "car",
      "ticket", "guitar",  "bicycle",  "camera", "map"};
  return v;
}

const std::vector<std::pair<const char*, int>>& numbers() {
  static const std::vector<std::pair<const char*, int>> v = {
      {"two", 2},   {"three", 3}, {"four", 4}, {"five", 5},
      {"six", 6},   {"seven", 7}, {"eight", 8}, {"nine", 9}};
  return v;
}

char gender_of(const std::string& name) {
  for (const auto& [n, g] : names())
    if (name == n) return g;
  return 0;
}

bool is_city(const std::string& w) {
  for (const char* c : cities())
    if (w == c) return true;
  return false;
}

const Verb* find_verb(const std::string& w, bool* past_form) {
  for (const auto* pool : {&object_verbs(), &person_verbs()})
    for (const Verb& v : *pool) {
      if (w == v.past) {
        *past_form = true;
        return &v;
      }
      if (w == v.base) {
        *past_form = false;
        return &v;
      }
    }
  return nullptr;
}

const char* find_noun(const std::string& w) {
  for (const char* n : nouns()) {
    if (w == n) return n;
    if (w == std::string(n) + "s") return n;
  }
  return nullptr;
}

int find_number(const std::string& w) {
  for (std::size_t i = 0; i < numbers().size(); ++i)
    if (w == numbers()[i].first) return static_cast<int>(i);
  return -1;
}

// words with punctuation stripped, original casing kept
std::vector<std::string> surface_words(const std::string& sentence) {
  std::vector<std::string> out;
  std::istringstream in(sentence);
  std::string w;
  while (in >> w) {
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back())))
      w.pop_back();
    out.push_back(w);
  }
  return out;
}

bool is_capitalized_entity(const std::string& w) {
  if (w.size() < 2) return false;
  if (!std::isupper(static_cast<unsigned char>(w[0]))) return false;
  if (w == "He" || w == "She" || w == "The" || w == "A") return false;
  for (std::size_t i = 1; i < w.size(); ++i)
    if (!std::islower(static_cast<unsigned char>(w[i]))) return false;
  return true;
}

std::string replace_word(const std::string& sentence, int word_index,
                         const std::string& replacement,
                         std::pair<int, int>* span) {
  auto spans = word_char_spans(sentence);
  auto [b, e] = spans.at(word_index);
  // keep trailing punctuation attached to the word
  int core_end = e;
  while (core_end > b &&
         std::ispunct(static_cast<unsigned char>(sentence[core_end - 1])))
    --core_end;
  std::string out = sentence.substr(0, b) + replacement +
                    sentence.substr(core_end);
  *span = {b, b + static_cast<int>(replacement.size())};
  return out;
}

}  // namespace

const char* rule_name(CorruptionRule r) {
  switch (r) {
    case CorruptionRule::EntitySwap: return "entity_swap";
    case CorruptionRule::NumberSwap: return "number_swap";
    case CorruptionRule::NegationToggle: return "negation_toggle";
    case CorruptionRule::PronounSwap: return "pronoun_swap";
  }
  return "?";
}

Corruption synth_corrupt(const std::vector<std::string>& document_sentences,
                         const std::string& source_sentence,
                         CorruptionRule rule, uint64_t seed) {
  Rng rng(derive_seed(seed, 0x5e17));
  std::vector<std::string> words = surface_words(source_sentence);
  Corruption out;

  switch (rule) {
    case CorruptionRule::EntitySwap: {
      // inventory: capitalized tokens in the document, split by category
      std::set<std::string> doc_names, doc_cities;
      for (const std::string& s : document_sentences)
        for (const std::string& w : surface_words(s)) {
          if (!is_capitalized_entity(w)) continue;
          if (is_city(w))
            doc_cities.insert(w);
          else
            doc_names.insert(w);
        }
      std::vector<int> sites;
      for (std::size_t i = 0; i < words.size(); ++i)
        if (is_capitalized_entity(words[i])) sites.push_back(static_cast<int>(i));
      rng.shuffle(sites);
      for (int site : sites) {
        const bool city = is_city(words[site]);
        std::vector<std::string> pool;
        for (const std::string& cand : (city ? doc_cities : doc_names))
          if (cand != words[site]) pool.push_back(cand);
        if (pool.empty()) continue;
        const std::string& repl = pool[rng.uniform_int(
            static_cast<int>(pool.size()))];
        out.sentence = replace_word(source_sentence, site, repl, &out.span);
        return out;
      }
      throw RuleNotApplicableError("entity_swap: no swappable entity");
    }
    case CorruptionRule::NumberSwap: {
      // prefer a number the document never mentions so the swap actually
      // contradicts it; fall back to any different number
      std::set<int> doc_numbers;
      for (const std::string& s : document_sentences)
        for (const std::string& w : surface_words(s)) {
          int n = find_number(w);
          if (n >= 0) doc_numbers.insert(n);
        }
      for (std::size_t i = 0; i < words.size(); ++i) {
        int n = find_number(words[i]);
        if (n < 0) continue;
        std::vector<int> fresh, any;
        for (int c = 0; c < static_cast<int>(numbers().size()); ++c) {
          if (c == n) continue;
          any.push_back(c);
          if (!doc_numbers.count(c)) fresh.push_back(c);
        }
        const std::vector<int>& pool = fresh.empty() ? any : fresh;
        int other = pool[rng.uniform_int(static_cast<int>(pool.size()))];
        out.sentence = replace_word(source_sentence, static_cast<int>(i),
                                    numbers()[other].first, &out.span);
        return out;
      }
      throw RuleNotApplicableError("number_swap: no number token");
    }
    case CorruptionRule::NegationToggle: {
      for (std::size_t i = 0; i < words.size(); ++i) {
        bool past = false;
        const Verb* v = find_verb(words[i], &past);
        if (!v) continue;
        auto spans = word_char_spans(source_sentence);
        if (past) {
          // "<past>" -> "did not <base>"
          auto [b, e] = spans[i];
          int core_end = e;
          while (core_end > b && std::ispunct(static_cast<unsigned char>(
                                     source_sentence[core_end - 1])))
            --core_end;
          std::string repl = std::string("did not ") + v->base;
          out.sentence = source_sentence.substr(0, b) + repl +
                         source_sentence.substr(core_end);
          out.span = {b, b + static_cast<int>(repl.size())};
        } else {
          // "did not <base>" -> "<past>"
          if (i < 2 || words[i - 2] != "did" || words[i - 1] != "not")
            continue;
          int b = spans[i - 2].first;
          auto [vb, ve] = spans[i];
          int core_end = ve;
          while (core_end > vb && std::ispunct(static_cast<unsigned char>(
                                      source_sentence[core_end - 1])))
            --core_end;
          out.sentence = source_sentence.substr(0, b) + v->past +
                         source_sentence.substr(core_end);
          out.span = {b, b + static_cast<int>(std::string(v->past).size())};
        }
        return out;
      }
      throw RuleNotApplicableError("negation_toggle: no verb site");
    }
    case CorruptionRule::PronounSwap: {
      if (!words.empty() && (words[0] == "He" || words[0] == "She")) {
        out.sentence = replace_word(source_sentence, 0,
                                    words[0] == "He" ? "She" : "He", &out.span);
        return out;
      }
      for (std::size_t i = 0; i < words.size(); ++i) {
        char g = gender_of(words[i]);
        if (!g) continue;
        // wrong-gender pronoun for the entity
        std::string repl = (g == 'f') ? "He" : "She";
        if (i > 0) repl[0] = std::tolower(static_cast<unsigned char>(repl[0]));
        out.sentence =
            replace_word(source_sentence, static_cast<int>(i), repl, &out.span);
        return out;
      }
      throw RuleNotApplicableError("pronoun_swap: no pronoun or name site");
    }
  }
  throw std::logic_error("unknown corruption rule");
}

// ---------------------------------------------------------------------------
// Template-world semantic analysis
// ---------------------------------------------------------------------------

Analysis analyze_template_sentence(const std::string& sentence) {
  std::vector<std::string> words = surface_words(sentence);
  if (words.empty())
    throw std::invalid_argument("analyze: empty sentence");

  Analysis out;
  AmrGraph& g = out.graph;
  std::size_t i = 0;

  // subject
  std::string subj_var = "p";
  int subj_word = static_cast<int>(i);
  if (words[i] == "He" || words[i] == "he") {
    g.add_instance(subj_var, "he");
    ++i;
  } else if (words[i] == "She" || words[i] == "she") {
    g.add_instance(subj_var, "she");
    ++i;
  } else if (gender_of(words[i]) || is_capitalized_entity(words[i])) {
    g.add_instance(subj_var, "person");
    g.add_instance("n", "name");
    g.add_edge({subj_var, "name", "n", false});
    g.add_edge({"n", "op1", "\"" + words[i] + "\"", true});
    out.alignments["n"] = {subj_word};
    ++i;
  } else {
    throw std::invalid_argument("analyze: unrecognized subject '" + words[i] +
                                "'");
  }
  out.alignments[subj_var] = {subj_word};

  // optional negation, then verb
  bool negated = false;
  std::vector<int> verb_words;
  if (i + 1 < words.size() && words[i] == "did" && words[i + 1] == "not") {
    negated = true;
    verb_words.push_back(static_cast<int>(i));
    verb_words.push_back(static_cast<int>(i + 1));
    i += 2;
  }
  if (i >= words.size())
    throw std::invalid_argument("analyze: missing verb");
  bool past = false;
  const Verb* verb = find_verb(words[i], &past);
  if (!verb)
    throw std::invalid_argument("analyze: unknown verb '" + words[i] + "'");
  verb_words.push_back(static_cast<int>(i));
  ++i;

  AmrGraph g2;  // rebuild with verb as root
  g2.add_instance("v", verb->frame);
  g2.set_root("v");
  for (const auto& [var, c] : g.instances()) g2.add_instance(var, c);
  for (const AmrEdge& e : g.edges()) g2.add_edge(e);
  g = g2;
  g.add_edge({"v", "ARG0", subj_var, false});
  if (negated) g.add_edge({"v", "polarity", "-", true});
  out.alignments["v"] = verb_words;

  // object: person, or [number]? noun
  if (i < words.size() && (words[i] == "a" || words[i] == "the")) ++i;
  if (i < words.size() && words[i] != "in") {
    if (gender_of(words[i]) || (is_capitalized_entity(words[i]) &&
                                !is_city(words[i]))) {
      g.add_instance("p2", "person");
      g.add_instance("n2", "name");
      g.add_edge({"v", "ARG1", "p2", false});
      g.add_edge({"p2", "name", "n2", false});
      g.add_edge({"n2", "op1", "\"" + words[i] + "\"", true});
      out.alignments["p2"] = {static_cast<int>(i)};
      out.alignments["n2"] = {static_cast<int>(i)};
      ++i;
    } else {
      int num = find_number(words[i]);
      int num_word = -1;
      if (num >= 0) {
        num_word = static_cast<int>(i);
        ++i;
      }
      if (i >= words.size())
        throw std::invalid_argument("analyze: dangling number");
      const char* noun = find_noun(words[i]);
      if (!noun)
        throw std::invalid_argument("analyze: unknown object '" + words[i] +
                                    "'");
      g.add_instance("o", noun);
      g.add_edge({"v", "ARG1", "o", false});
      out.alignments["o"] = {static_cast<int>(i)};
      if (num >= 0) {
        g.add_edge({"o", "quant", std::to_string(numbers()[num].second),
                    true});
        // the quantity token counts toward the governed noun's span
        out.alignments["o"].insert(out.alignments["o"].begin(), num_word);
      }
      ++i;
    }
  }

  // optional location
  if (i < words.size() && words[i] == "in") {
    ++i;
    if (i >= words.size() || !is_city(words[i]))
      throw std::invalid_argument("analyze: missing city after 'in'");
    g.add_instance("c", "city");
    g.add_instance("n3", "name");
    g.add_edge({"v", "location", "c", false});
    g.add_edge({"c", "name", "n3", false});
    g.add_edge({"n3", "op1", "\"" + words[i] + "\"", true});
    out.alignments["c"] = {static_cast<int>(i)};
    out.alignments["n3"] = {static_cast<int>(i)};
    ++i;
  }
  if (i != words.size())
    throw std::invalid_argument("analyze: trailing words at '" + words[i] +
                                "'");
  return out;
}

// ---------------------------------------------------------------------------
// Corpus generation
// ---------------------------------------------------------------------------

namespace {

std::string make_sentence(Rng& rng, const std::vector<int>& name_pool,
                          const std::vector<int>& city_pool) {
  std::ostringstream s;
  const auto& subj = names()[name_pool[rng.uniform_int(
      static_cast<int>(name_pool.size()))]];
  s << subj.first << " ";
  // documents state plain positive facts; negation enters only through the
  // corruption rule, which keeps the corpus labels learnable
  bool negated = false;
  bool person_object = rng.uniform() < 0.3;
  if (person_object) {
    const Verb& v = person_verbs()[rng.uniform_int(
        static_cast<int>(person_verbs().size()))];
    s << (negated ? std::string("did not ") + v.base : v.past) << " ";
    const auto& obj = names()[name_pool[rng.uniform_int(
        static_cast<int>(name_pool.size()))]];
    s << obj.first;
  } else {
    const Verb& v = object_verbs()[rng.uniform_int(
        static_cast<int>(object_verbs().size()))];
    s << (negated ? std::string("did not ") + v.base : v.past) << " ";
    if (rng.uniform() < 0.7) {
      const auto& num = numbers()[rng.uniform_int(
          static_cast<int>(numbers().size()))];
      s << num.first << " "
        << nouns()[rng.uniform_int(static_cast<int>(nouns().size()))] << "s";
    } else {
      s << "a "
        << nouns()[rng.uniform_int(static_cast<int>(nouns().size()))];
    }
  }
  if (rng.uniform() < 0.8)
    s << " in "
      << cities()[city_pool[rng.uniform_int(
             static_cast<int>(city_pool.size()))]];
  s << ".";
  return s.str();
}

std::string pronoun_paraphrase(const std::string& sentence) {
  std::vector<std::string> words = surface_words(sentence);
  char g = words.empty() ? 0 : gender_of(words[0]);
  if (!g) return sentence;
  std::pair<int, int> span;
  return replace_word(sentence, 0, g == 'f' ? "She" : "He", &span);
}

}  // namespace

std::vector<FactualityExample> generate_corpus(const SynthConfig& config) {
  std::vector<FactualityExample> out;
  Rng rng(config.seed);
  const std::vector<CorruptionRule> rules = {
      CorruptionRule::EntitySwap, CorruptionRule::NumberSwap,
      CorruptionRule::NegationToggle, CorruptionRule::PronounSwap};

  for (int idx = 0; idx < config.num_examples; ++idx) {
    // entity pool shared across the document's sentences
    std::vector<int> name_pool, city_pool;
    int n_names = 2 + rng.uniform_int(3);
    while (static_cast<int>(name_pool.size()) < n_names) {
      int cand = rng.uniform_int(static_cast<int>(names().size()));
      if (std::find(name_pool.begin(), name_pool.end(), cand) ==
          name_pool.end())
        name_pool.push_back(cand);
    }
    int n_cities = 1 + rng.uniform_int(2);
    while (static_cast<int>(city_pool.size()) < n_cities) {
      int cand = rng.uniform_int(static_cast<int>(cities().size()));
      if (std::find(city_pool.begin(), city_pool.end(), cand) ==
          city_pool.end())
        city_pool.push_back(cand);
    }

    FactualityExample ex;
    ex.id = "synth-" + std::to_string(idx);
    ex.origin = "synthetic";
    int n_sent = config.min_doc_sentences +
                 rng.uniform_int(config.max_doc_sentences -
                                 config.min_doc_sentences + 1);
    for (int s = 0; s < n_sent; ++s) {
      std::string sent = make_sentence(rng, name_pool, city_pool);
      ex.document.push_back(sent);
      ex.doc_amrs.push_back(
          serialize_penman(analyze_template_sentence(sent).graph));
    }

    int src = rng.uniform_int(n_sent);
    std::string summary = ex.document[src];
    if (rng.uniform() < config.pronoun_paraphrase_rate)
      summary = pronoun_paraphrase(summary);

    bool corrupt = rng.uniform() < config.corruption_rate;
    if (corrupt) {
      // weighted rule preference with fallback to any applicable rule
      double total_weight = 0.0;
      for (double w : config.rule_weights) total_weight += w;
      if (total_weight <= 0.0)
        throw std::invalid_argument("rule_weights must have positive sum");
      double draw = rng.uniform() * total_weight;
      int first = 0;
      for (; first + 1 < static_cast<int>(rules.size()); ++first) {
        draw -= config.rule_weights[first];
        if (draw < 0.0) break;
      }
      bool done = false;
      for (int attempt = 0; attempt < static_cast<int>(rules.size());
           ++attempt) {
        CorruptionRule rule =
            rules[(first + attempt) % static_cast<int>(rules.size())];
        try {
          Corruption c = synth_corrupt(ex.document, summary, rule,
                                       derive_seed(config.seed, idx));
          ex.summary_sentence = c.sentence;
          ex.nonfactual_spans.push_back(c.span);
          ex.label = Label::NonFactual;
          done = true;
          break;
        } catch (const RuleNotApplicableError&) {
        }
      }
      if (!done) corrupt = false;
    }
    if (!corrupt) {
      ex.summary_sentence = summary;
      ex.label = Label::Factual;
    }

    Analysis a = analyze_template_sentence(ex.summary_sentence);
    ex.summary_amr = serialize_penman(a.graph);
    ex.alignments = a.alignments;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<std::string> template_vocabulary_lines() {
  std::vector<std::string> out;
  std::ostringstream s;
  for (const auto& [n, g] : names()) s << n << " ";
  for (const char* c : cities()) s << c << " ";
  for (const auto* pool : {&object_verbs(), &person_verbs()})
    for (const Verb& v : *pool)
      s << v.base << " " << v.past << " " << v.frame << " ";
  for (const char* n : nouns()) s << n << " " << n << "s ";
  for (const auto& [w, val] : numbers()) s << w << " " << val << " ";
  s << "he she did not a the in person name city polarity quant location ";
  s << "ARG0 ARG1 op1 - .";
  // repeated so byte-pair merges (threshold 2) reach whole words; with a
  // single occurrence the vocabulary stays at fragment level and every
  // surface form dissolves into subwords shared across unrelated words
  out.push_back(s.str());
  out.push_back(s.str());
  return out;
}

}  // namespace factgraph
