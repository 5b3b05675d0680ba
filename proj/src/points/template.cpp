#include <fstream>
#include <sstream>

#include "wimpe/points.hpp"

namespace wimpe {

// Generated from templates/*.txt at build time.
namespace embedded {
extern const std::map<std::string, std::string, std::less<>>& templates();
}

namespace {

bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

// Calls on_text/on_placeholder for each piece of `body`.
template <class OnText, class OnPlaceholder>
void scan(std::string_view body, OnText on_text, OnPlaceholder on_placeholder) {
  std::size_t i = 0;
  while (i < body.size()) {
    const char c = body[i];
    if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
      on_text(std::string_view("{"));
      i += 2;
      continue;
    }
    if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
      on_text(std::string_view("}"));
      i += 2;
      continue;
    }
    if (c == '{' && i + 1 < body.size() && ident_start(body[i + 1])) {
      std::size_t j = i + 1;
      while (j < body.size() && ident_char(body[j])) ++j;
      if (j < body.size() && body[j] == '}') {
        on_placeholder(body.substr(i + 1, j - i - 1));
        i = j + 1;
        continue;
      }
    }
    on_text(body.substr(i, 1));
    ++i;
  }
}

}  // namespace

std::set<std::string> PromptTemplate::placeholders() const {
  std::set<std::string> out;
  scan(body, [](std::string_view) {}, [&](std::string_view name) { out.emplace(name); });
  return out;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& bindings,
                                   const std::set<std::string>& required) const {
  const auto present = placeholders();
  for (const auto& r : required) {
    if (!present.contains(r)) {
      throw TemplateError("template \"" + name + "\" lacks placeholder {" + r + "}");
    }
  }
  std::string out;
  out.reserve(body.size());
  scan(
      body, [&](std::string_view t) { out.append(t); },
      [&](std::string_view ph) {
        auto it = bindings.find(std::string(ph));
        if (it == bindings.end()) {
          throw TemplateError("template \"" + name + "\" uses unbound placeholder {" +
                              std::string(ph) + "}");
        }
        out.append(it->second);
      });
  return out;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TemplateError("cannot read template " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return {path.stem().string(), ss.str()};
}

const PromptTemplate& default_template(std::string_view name) {
  static const std::map<std::string, PromptTemplate, std::less<>> kTemplates = [] {
    std::map<std::string, PromptTemplate, std::less<>> m;
    for (const auto& [n, body] : embedded::templates()) m.emplace(n, PromptTemplate{n, body});
    return m;
  }();
  auto it = kTemplates.find(name);
  if (it == kTemplates.end()) throw TemplateError("no shipped template named \"" + std::string(name) + "\"");
  return it->second;
}

std::vector<std::string> default_template_names() {
  std::vector<std::string> out;
  for (const auto& [n, body] : embedded::templates()) out.push_back(n);
  return out;
}

TemplateSet::TemplateSet(const std::filesystem::path& override_dir) {
  for (const auto& n : default_template_names()) {
    const auto p = override_dir / (n + ".txt");
    if (std::filesystem::exists(p)) set(PromptTemplate::load(p));
  }
}

const PromptTemplate& TemplateSet::get(std::string_view name) const {
  if (auto it = overrides_.find(name); it != overrides_.end()) return it->second;
  return default_template(name);
}

void TemplateSet::set(PromptTemplate t) {
  std::string key = t.name;
  overrides_.insert_or_assign(std::move(key), std::move(t));
}

}  // namespace wimpe
