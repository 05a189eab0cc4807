#include "ata/marks.hpp"

#include "ata/image.hpp"

#include <fmt/format.h>

#include <array>

namespace ata {

namespace {

constexpr std::array<Rgb, 6> kPalette = {{
    {220, 20, 60}, {30, 144, 255}, {34, 139, 34}, {255, 140, 0}, {148, 0, 211}, {0, 128, 128},
}};

constexpr int kLabelScale = 2;
constexpr int kLabelPad = 2;

// Rewrites mark="old" tokens to the dense numbering.
std::string remap_dom(std::string_view dom, const std::map<int, int>& remap) {
    std::string out;
    constexpr std::string_view key = "mark=\"";
    std::size_t pos = 0;
    while (true) {
        auto hit = dom.find(key, pos);
        if (hit == std::string_view::npos) break;
        auto start = hit + key.size();
        auto end = dom.find('"', start);
        if (end == std::string_view::npos) break;
        out.append(dom.substr(pos, start - pos));
        auto token = dom.substr(start, end - start);
        int old_id = 0;
        bool parsed = !token.empty() && token.size() < 9;
        for (char c : token) parsed = parsed && c >= '0' && c <= '9';
        if (parsed) old_id = std::stoi(std::string(token));
        auto it = parsed ? remap.find(old_id) : remap.end();
        out += it == remap.end() ? std::string(token) : std::to_string(it->second);
        pos = end;
    }
    out.append(dom.substr(pos));
    return out;
}

std::string mark_text_render(std::string_view payload, const std::vector<ElementDescriptor>& elements) {
    auto lines = text::split_lines(payload);
    std::size_t cursor = 0;
    for (const auto& e : elements) {
        auto want = text_render_line(e);
        for (std::size_t i = cursor; i < lines.size(); ++i) {
            auto body = text::trim(lines[i]);
            if (body == want) {
                auto indent = lines[i].substr(0, lines[i].find_first_not_of(" \t"));
                lines[i] = fmt::format("{}[{}] {}", indent, e.mark_id, body);
                cursor = i + 1;
                break;
            }
        }
    }
    std::string out = text::join(lines, "\n");
    if (!payload.empty() && payload.back() == '\n') out += '\n';
    return out;
}

std::string mark_image(std::string_view payload, const std::vector<ElementDescriptor>& elements,
                       std::map<int, BoundingBox>& label_boxes) {
    Image img = decode_image(payload);
    for (std::size_t i = 0; i < elements.size(); ++i)
        img.stroke_rect(elements[i].bbox, kPalette[i % kPalette.size()], 2);

    std::vector<BoundingBox> placed;
    for (std::size_t i = 0; i < elements.size(); ++i) {
        const auto& e = elements[i];
        auto ext = number_extent(e.mark_id, kLabelScale);
        BoundingBox box{e.bbox.x, e.bbox.y, ext.width + 2 * kLabelPad, ext.height + 2 * kLabelPad};
        // Slide right, then down, until the label clears every earlier label.
        for (int attempt = 0; attempt < 256; ++attempt) {
            bool clash = false;
            for (const auto& p : placed) clash = clash || p.intersects(box);
            if (!clash) break;
            box.x += box.width + 1;
            if (img.width() > 0 && box.x + box.width > img.width()) {
                box.x = e.bbox.x;
                box.y += box.height + 1;
            }
        }
        placed.push_back(box);
        label_boxes[e.mark_id] = box;
        img.fill_rect(box, kPalette[i % kPalette.size()]);
        img.draw_number(box.x + kLabelPad, box.y + kLabelPad, e.mark_id, {255, 255, 255}, kLabelScale);
    }
    return payload.starts_with("P6") ? encode_ppm(img) : encode_png(img);
}

}  // namespace

const ElementDescriptor* MarkedObservation::element(int mark_id) const {
    auto it = marks.find(mark_id);
    return it == marks.end() ? nullptr : &it->second;
}

std::optional<int> MarkedObservation::driver_id(int mark_id) const {
    auto it = driver_ids.find(mark_id);
    if (it == driver_ids.end()) return std::nullopt;
    return it->second;
}

MarkedObservation annotate_marks(const PageObservation& obs) {
    MarkedObservation out;
    out.observation = obs;
    auto& elements = out.observation.elements;
    std::map<int, int> remap;
    for (std::size_t i = 0; i < elements.size(); ++i) {
        int dense = static_cast<int>(i) + 1;
        remap.emplace(elements[i].mark_id, dense);
        out.driver_ids.emplace(dense, elements[i].mark_id);
        elements[i].mark_id = dense;
        out.marks.emplace(dense, elements[i]);
    }
    if (elements.empty()) return out;

    out.observation.dom_snapshot = remap_dom(obs.dom_snapshot, remap);
    auto& shot = out.observation.screenshot;
    if (shot.kind == ScreenshotArtifact::Kind::TextRender) {
        shot.payload = mark_text_render(shot.payload, elements);
    } else if (!shot.payload.empty()) {
        shot.payload = mark_image(shot.payload, elements, out.label_boxes);
    }
    return out;
}

}  // namespace ata
