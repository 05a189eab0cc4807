#include "ata/prompts.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace ata {

namespace detail {
extern const std::string_view kSeeActV1;
extern const std::string_view kPinataProfileV1;
extern const std::string_view kPinataActorV1;
extern const std::string_view kPinataJudgeV1;
extern const std::string_view kPinataAssertorV1;
}  // namespace detail

namespace {

const std::map<std::string, std::string_view, std::less<>>& registry() {
    static const std::map<std::string, std::string_view, std::less<>> r = {
        {"seeact.v1", detail::kSeeActV1},
        {"pinata-profile.v1", detail::kPinataProfileV1},
        {"pinata-actor.v1", detail::kPinataActorV1},
        {"pinata-judge.v1", detail::kPinataJudgeV1},
        {"pinata-assertor.v1", detail::kPinataAssertorV1},
    };
    return r;
}

constexpr std::string_view kOpen = "{{";
constexpr std::string_view kClose = "}}";

}  // namespace

PromptTemplate builtin_template(std::string_view name) {
    auto it = registry().find(name);
    if (it == registry().end()) throw Error(fmt::format("unknown prompt template '{}'", name));
    return {it->first, std::string(it->second)};
}

std::vector<std::string> builtin_template_names() {
    std::vector<std::string> out;
    for (const auto& [name, _] : registry()) out.push_back(name);
    return out;
}

PromptTemplate load_template(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot read prompt template '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    auto name = path.substr(path.find_last_of('/') + 1);
    if (name.ends_with(".tmpl")) name.resize(name.size() - 5);
    return {name, ss.str()};
}

std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        auto open = tpl.find(kOpen, pos);
        if (open == std::string_view::npos) break;
        auto close = tpl.find(kClose, open + kOpen.size());
        if (close == std::string_view::npos) break;
        auto key = std::string(text::trim(tpl.substr(open + kOpen.size(), close - open - kOpen.size())));
        auto it = vars.find(key);
        if (it == vars.end()) throw Error(fmt::format("prompt template variable '{}' has no value", key));
        out.append(tpl.substr(pos, open - pos));
        out += it->second;
        pos = close + kClose.size();
    }
    out.append(tpl.substr(pos));
    return out;
}

std::vector<ContentPart> render_template_parts(std::string_view tpl, const std::map<std::string, std::string>& vars,
                                               const ContentPart& screenshot) {
    constexpr std::string_view marker = "{{ SCREENSHOT }}";
    auto at = tpl.find(marker);
    if (at == std::string_view::npos) return {ContentPart::text(render_template(tpl, vars))};

    auto before = tpl.substr(0, at);
    auto after = tpl.substr(at + marker.size());
    while (!before.empty() && before.back() == '\n') before.remove_suffix(1);
    if (!after.empty() && after.front() == '\n') after.remove_prefix(1);

    std::vector<ContentPart> parts;
    parts.push_back(ContentPart::text(render_template(before, vars)));
    parts.push_back(screenshot);
    parts.push_back(ContentPart::text(render_template(after, vars)));
    return parts;
}

}  // namespace ata
