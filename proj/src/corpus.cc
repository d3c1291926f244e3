#include "kbanon/corpus.h"

#include <fstream>
#include <unordered_set>

#include "kbanon/error.h"

namespace kbanon {

using nlohmann::json;

std::string_view span_text(std::string_view text, const Span& span) {
  if (span.start >= span.end || span.end > text.size()) {
    throw InvalidArgument("span [" + std::to_string(span.start) + ", " +
                          std::to_string(span.end) + ") outside text of " +
                          std::to_string(text.size()) + " bytes");
  }
  return text.substr(span.start, span.length());
}

void validate_document(const Document& doc) {
  const Entity* prev = nullptr;
  for (std::size_t i = 0; i < doc.entities.size(); ++i) {
    const Entity& e = doc.entities[i];
    const std::string where = "document '" + doc.id + "' entity " + std::to_string(i);
    if (e.span.start >= e.span.end) {
      throw InvalidArgument(where + ": empty or inverted span");
    }
    if (e.label.empty()) {
      throw InvalidArgument(where + ": empty label");
    }
    if (e.span.end > doc.text.size()) {
      throw InvalidArgument(where + ": span outside text");
    }
    if (std::string_view(doc.text).substr(e.span.start, e.span.length()) != e.surface) {
      throw InvalidArgument(where + ": surface '" + e.surface +
                            "' does not match text at span");
    }
    if (prev != nullptr && e.span.start < prev->span.end) {
      throw InvalidArgument(where + ": overlaps or precedes previous entity");
    }
    prev = &e;
  }
}

void validate_unique_ids(const std::vector<Document>& docs) {
  std::unordered_set<std::string_view> seen;
  for (const auto& d : docs) {
    if (!seen.insert(d.id).second) {
      throw FormatError("duplicate document id '" + d.id + "'");
    }
  }
}

json to_json(const ScoreVector& s) {
  return json{{"s_priv", s.s_priv}, {"s_knw_raw", s.s_knw_raw},
              {"s_retr_raw", s.s_retr_raw}, {"s_knw", s.s_knw},
              {"s_retr", s.s_retr}, {"psi", s.psi}};
}

json to_json(const Entity& e) {
  json j{{"surface", e.surface}, {"label", e.label},
         {"start", e.span.start}, {"end", e.span.end}};
  if (e.scores) j["scores"] = to_json(*e.scores);
  return j;
}

namespace {

ScoreVector scores_from_json(const json& j) {
  ScoreVector s;
  s.s_priv = j.at("s_priv").get<double>();
  s.s_knw_raw = j.at("s_knw_raw").get<double>();
  s.s_retr_raw = j.at("s_retr_raw").get<double>();
  s.s_knw = j.at("s_knw").get<double>();
  s.s_retr = j.at("s_retr").get<double>();
  s.psi = j.at("psi").get<double>();
  return s;
}

}  // namespace

Entity entity_from_json(const json& j) {
  Entity e;
  e.surface = j.at("surface").get<std::string>();
  e.label = j.at("label").get<std::string>();
  e.span.start = j.at("start").get<std::size_t>();
  e.span.end = j.at("end").get<std::size_t>();
  if (j.contains("scores") && !j["scores"].is_null()) {
    e.scores = scores_from_json(j["scores"]);
  }
  return e;
}

json to_json(const Document& d, const std::string& text_field) {
  json j{{"id", d.id}, {text_field, d.text}};
  if (!d.entities.empty()) {
    json ents = json::array();
    for (const auto& e : d.entities) ents.push_back(to_json(e));
    j["entities"] = std::move(ents);
  }
  if (!d.meta.empty()) j["meta"] = d.meta;
  return j;
}

json to_json(const AnonymizedDocument& d, const std::string& text_field) {
  json gen = json::array();
  for (const auto& g : d.generalized) {
    json item = to_json(g.entity);
    item.erase("scores");
    item["descriptor"] = g.descriptor;
    gen.push_back(std::move(item));
  }
  json kept = json::array();
  for (const auto& e : d.kept) {
    json item = to_json(e);
    item.erase("scores");
    kept.push_back(std::move(item));
  }
  return json{{"id", d.id}, {text_field, d.text}, {"generalized", std::move(gen)},
              {"kept", std::move(kept)}};
}

Corpus load_corpus(const std::string& path, const std::string& text_field,
                   const std::optional<std::string>& id_field) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus '" + path + "'");

  Corpus corpus;
  corpus.source_path = path;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;

    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& ex) {
      throw FormatError(path + ": malformed JSON at line " + std::to_string(line_no) +
                        ": " + ex.what());
    }
    if (!j.is_object()) {
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        " is not a JSON object");
    }
    auto text_it = j.find(text_field);
    if (text_it == j.end()) {
      throw FormatError("missing field '" + text_field + "' at line " +
                        std::to_string(line_no));
    }
    if (!text_it->is_string()) {
      throw FormatError("field '" + text_field + "' at line " + std::to_string(line_no) +
                        " is not a string");
    }

    Document doc;
    doc.text = text_it->get<std::string>();
    if (id_field && j.contains(*id_field)) {
      const json& id = j[*id_field];
      doc.id = id.is_string() ? id.get<std::string>() : id.dump();
    } else {
      doc.id = std::to_string(line_no - 1);
    }
    try {
      if (auto it = j.find("entities"); it != j.end()) {
        for (const auto& e : *it) doc.entities.push_back(entity_from_json(e));
      }
      if (auto it = j.find("meta"); it != j.end()) {
        doc.meta = it->get<std::map<std::string, std::string>>();
      }
      validate_document(doc);
    } catch (const json::exception& ex) {
      throw FormatError(path + ": bad entity/meta record at line " +
                        std::to_string(line_no) + ": " + ex.what());
    } catch (const InvalidArgument& ex) {
      throw FormatError(path + ": line " + std::to_string(line_no) + ": " + ex.what());
    }
    corpus.docs.push_back(std::move(doc));
  }
  validate_unique_ids(corpus.docs);
  return corpus;
}

namespace {

template <typename Docs>
void write_lines(const Docs& docs, const std::string& path,
                 const std::string& text_field) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& d : docs) {
    out << to_json(d, text_field).dump() << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

void write_corpus(const Corpus& corpus, const std::string& path,
                  const std::string& text_field) {
  write_lines(corpus.docs, path, text_field);
}

void write_corpus(const AnonymizedCorpus& corpus, const std::string& path,
                  const std::string& text_field) {
  write_lines(corpus.docs, path, text_field);
}

}  // namespace kbanon
