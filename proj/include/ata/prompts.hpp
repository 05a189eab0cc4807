#pragma once

// Versioned prompt templates. The shipped files under data/prompts/ are
// compiled in; a config may point at replacement files.

#include "ata/llm.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ata {

struct PromptTemplate {
    /// e.g. "seeact.v1"
    std::string name;
    std::string text;
};

PromptTemplate builtin_template(std::string_view name);
/// Names of the compiled-in templates.
std::vector<std::string> builtin_template_names();
PromptTemplate load_template(const std::string& path);

/// Replaces every `{{ KEY }}` with vars[KEY]. Unknown keys throw.
std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars);

/// Like render_template, but `{{ SCREENSHOT }}` splits the output into two
/// text parts with `screenshot` between them.
std::vector<ContentPart> render_template_parts(std::string_view tpl, const std::map<std::string, std::string>& vars,
                                               const ContentPart& screenshot);

}  // namespace ata
