#include "papereval/prompts.hpp"

#include "papereval/hash.hpp"
#include "papereval/text_util.hpp"

namespace papereval {

namespace embedded {
const std::map<std::string, std::string>& files();
}

namespace {

std::string stem_of(const std::string& file) {
    const auto dot = file.rfind('.');
    return dot == std::string::npos ? file : file.substr(0, dot);
}

}  // namespace

const PromptLibrary& PromptLibrary::embedded() {
    static const PromptLibrary lib = [] {
        PromptLibrary l;
        for (const auto& [file, content] : embedded::files()) {
            if (file.size() > 4 && file.compare(file.size() - 4, 4, ".txt") == 0) l.templates_[stem_of(file)] = content;
        }
        return l;
    }();
    return lib;
}

PromptLibrary PromptLibrary::with_overrides(const fs::path& dir) {
    PromptLibrary lib = embedded();
    if (dir.empty()) return lib;
    if (!fs::is_directory(dir)) throw ConfigError("prompt directory not found: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        lib.templates_[entry.path().stem().string()] = text::read_file(entry.path());
    }
    return lib;
}

const std::string& PromptLibrary::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError("unknown prompt template: " + name);
    return it->second;
}

std::string PromptLibrary::version(const std::string& name) const { return sha256_hex(get(name)).substr(0, 12); }

std::map<std::string, std::string> PromptLibrary::versions() const {
    std::map<std::string, std::string> out;
    for (const auto& [name, _] : templates_) out[name] = version(name);
    return out;
}

std::string PromptLibrary::render(const std::string& name, const TemplateValues& values) const {
    return text::render_template(get(name), values);
}

const std::string& embedded_section_rules() {
    static const std::string rules = [] {
        auto it = embedded::files().find("section_rules.tsv");
        return it == embedded::files().end() ? std::string() : it->second;
    }();
    return rules;
}

std::string expand_block(const std::string& tmpl, const std::string& block, const std::string& expansion) {
    const auto pos = tmpl.find(block);
    if (pos == std::string::npos) throw ConfigError("template is missing its repeated-item block");
    std::string out = tmpl;
    out.replace(pos, block.size(), expansion);
    return out;
}

}  // namespace papereval
