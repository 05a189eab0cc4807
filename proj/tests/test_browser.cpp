#include "support.hpp"

#include "ata/image.hpp"
#include "ata/marks.hpp"

#include <doctest.h>

using namespace ata;
using namespace ata::testing;

namespace {

const char* kFormFixture = R"(
fixture: form
initial: edit

state: edit
  url: http://form.local/
  title: Edit profile
  element: name input "Name"
  element: id input "Customer id" readonly value="C-17"
  element: country select "Country" options="France|Canada"
  element: save button "Save"
  element: off button "Delete" disabled
  element: news checkbox "Newsletter"

state: saved
  url: http://form.local/saved
  title: Saved
  element: ok text "Profile saved"

state: popup
  url: http://form.local/popup
  title: Cookie banner
  overlay: true
  element: accept button "Accept"

transition: edit save CLICK when name~"ada" -> saved
transition: edit country SELECT when value="Canada" -> popup
)";

std::shared_ptr<const Fixture> form() {
    static auto fx = std::make_shared<const Fixture>(parse_fixture(kFormFixture));
    return fx;
}

int mark_of(const PageObservation& obs, std::string_view text) {
    for (const auto& e : obs.elements)
        if (e.text == text) return e.mark_id;
    return -1;
}

BrowserCommand random_command(std::mt19937& rng) {
    std::uniform_int_distribution<int> kind(0, 6), mark(0, 8), coin(0, 3);
    static const char* values[] = {"bike", "blake.sullivan@gmail.com", "Is it still available?", "Vehicles", "zzz"};
    std::string v = values[std::uniform_int_distribution<int>(0, 4)(rng)];
    switch (kind(rng)) {
        case 0: return BrowserCommand::click(mark(rng));
        case 1: return BrowserCommand::type(mark(rng), v);
        case 2: return BrowserCommand::select(mark(rng), v);
        case 3: return BrowserCommand::press_enter();
        case 4: return BrowserCommand::click_at({std::uniform_int_distribution<int>(0, 400)(rng),
                                                 std::uniform_int_distribution<int>(0, 400)(rng)});
        case 5: return coin(rng) ? BrowserCommand::scroll() : BrowserCommand::noop();
        default: return BrowserCommand::navigate(coin(rng) ? "http://classified.local/login" : "http://nowhere/");
    }
}

}  // namespace

TEST_SUITE("browser_env") {
    TEST_CASE("home page exposes a Login link") {
        auto s = home_session();
        auto obs = s.observe();
        CHECK(obs.title == "Classified - Home");
        auto m = mark_of(obs, "Login");
        REQUIRE(m > 0);
        CHECK(obs.find_mark(m)->role == ElementRole::Link);
        CHECK(obs.screenshot.kind == ScreenshotArtifact::Kind::TextRender);
        CHECK(text::is_valid_utf8(obs.screenshot.payload));
        CHECK(check_observation(obs).empty());
    }

    TEST_CASE("observe is a pure read") {
        auto s = home_session();
        CHECK(s.observe() == s.observe());
    }

    TEST_CASE("closed session reports a disconnect") {
        auto s = home_session();
        s.close();
        CHECK_FALSE(s.is_open());
        CHECK_THROWS_WITH_AS(s.observe(), doctest::Contains("disconnected"), DriverError);
        CHECK_THROWS_AS(s.execute(BrowserCommand::noop()), DriverError);
    }

    TEST_CASE("click Login follows the transition table") {
        auto s = home_session();
        auto r = s.execute(BrowserCommand::click(mark_of(s.observe(), "Login")));
        CHECK(r.ok());
        CHECK(s.observe().title == "Classified - Login");
        CHECK(s.state_name() == "login");
    }

    TEST_CASE("missing target leaves the page unchanged") {
        auto s = home_session();
        auto before = observation_hash(s.observe());
        auto r = s.execute(BrowserCommand::click(42));
        CHECK(r.status == CommandResult::Status::TargetNotFound);
        CHECK(observation_hash(s.observe()) == before);
    }

    TEST_CASE("read-only, disabled and non-input targets are rejected") {
        SimulatorSession s(form(), {});
        auto obs = s.observe();
        auto before = observation_hash(obs);
        auto r = s.execute(BrowserCommand::type(mark_of(obs, "Customer id"), "C-99"));
        CHECK(r.status == CommandResult::Status::Rejected);
        CHECK_FALSE(r.note.empty());
        CHECK(s.execute(BrowserCommand::click(mark_of(obs, "Delete"))).status == CommandResult::Status::Rejected);
        CHECK(s.execute(BrowserCommand::type(mark_of(obs, "Save"), "x")).status == CommandResult::Status::Rejected);
        CHECK(s.execute(BrowserCommand::select(mark_of(obs, "Country"), "Peru")).status ==
              CommandResult::Status::Rejected);
        CHECK(observation_hash(s.observe()) == before);
    }

    TEST_CASE("predicates, checkboxes and overlays") {
        SimulatorSession s(form(), {});
        auto obs = s.observe();
        CHECK(s.execute(BrowserCommand::click(mark_of(obs, "Save"))).ok());
        CHECK(s.state_name() == "edit");  // predicate not met
        CHECK(s.execute(BrowserCommand::click(mark_of(obs, "Newsletter"))).ok());
        CHECK(s.observe().find_mark(mark_of(obs, "Newsletter"))->attributes.at("checked") == "true");
        CHECK(s.execute(BrowserCommand::type(mark_of(obs, "Name"), "Ada Lovelace")).ok());
        CHECK(s.execute(BrowserCommand::click(mark_of(obs, "Save"))).ok());
        CHECK(s.state_name() == "saved");

        SimulatorSession p(form(), {});
        CHECK(p.execute(BrowserCommand::select(mark_of(p.observe(), "Country"), "Canada")).ok());
        auto pop = p.observe();
        CHECK(pop.overlay);
        CHECK(pop.screenshot.payload.find("(popup)") != std::string::npos);
        // Overlays are not part of the page's HTML.
        CHECK(pop.dom_snapshot.find("Accept") == std::string::npos);
    }

    TEST_CASE("command shape invariants") {
        CHECK_FALSE(check_command(BrowserCommand::click(1)));
        CHECK(check_command({CommandKind::Click, {}, std::nullopt}));
        CHECK(check_command({CommandKind::Type, 1, std::nullopt}));
        CHECK(check_command({CommandKind::Navigate, {}, std::nullopt}));
        CHECK(check_command({CommandKind::PressEnter, 1, std::nullopt}));
        CHECK(check_command({CommandKind::Noop, {}, std::string("x")}));
        CHECK_FALSE(check_command(BrowserCommand::navigate("http://x/")));
        auto s = home_session();
        CHECK_THROWS_AS(s.execute({CommandKind::Click, {}, std::nullopt}), std::invalid_argument);
    }

    TEST_CASE("reset returns a pristine session") {
        SimulatorDriver d;
        d.add_fixture(*classified());
        auto pristine = d.reset("classified")->observe();
        CHECK(pristine.title == "Classified - Home");

        auto s = d.reset("classified");
        auto obs = s->observe();
        s->execute(BrowserCommand::type(mark_of(obs, "Search"), "bike"));
        s->execute(BrowserCommand::click(mark_of(obs, "Search") + 2));
        s->execute(BrowserCommand::click(2));
        s->execute(BrowserCommand::type(4, "Is it still available?"));
        s->execute(BrowserCommand::click(5));
        CHECK(s->observe() != pristine);

        CHECK(d.reset("classified")->observe() == pristine);
        CHECK_THROWS_WITH_AS(d.reset("nope"), doctest::Contains("unknown app"), DriverError);
    }

    TEST_CASE("fixture errors name the line") {
        CHECK_THROWS_AS(parse_fixture("fixture: x\ninitial: a\nstate: a\n  element: k wand \"x\"\n"), FixtureError);
        try {
            parse_fixture("fixture: x\ninitial: a\nstate: a\n  colour: red\n");
            FAIL("unknown key accepted");
        } catch (const FixtureError& e) {
            CHECK(e.line() == 4);
        }
        CHECK_THROWS_AS(parse_fixture("fixture: x\ninitial: b\nstate: a\n"), FixtureError);
        CHECK_THROWS_AS(parse_fixture("fixture: x\ninitial: a\nstate: a\ntransition: a ghost CLICK -> a\n"), FixtureError);
    }

    TEST_CASE("annotate_marks labels elements densely") {
        PageObservation obs;
        obs.page_width = 300;
        obs.page_height = 200;
        for (int id : {7, 3, 11}) obs.elements.push_back({id, ElementRole::Button, "b" + std::to_string(id), {}, {0, id * 10, 50, 8}});
        obs.screenshot = {ScreenshotArtifact::Kind::TextRender, "[ b7 ]\n[ b3 ]\n[ b11 ]\n"};
        auto m = annotate_marks(obs);
        REQUIRE(m.marks.size() == 3);
        CHECK(m.marks.at(1).text == "b7");
        CHECK(m.marks.at(2).text == "b3");
        CHECK(m.marks.at(3).text == "b11");
        CHECK(m.driver_id(2) == 3);
        CHECK_FALSE(m.driver_id(4));
        CHECK(m.observation.screenshot.payload.find("[1] [ b7 ]") != std::string::npos);
        CHECK(m.observation.screenshot.payload.find("[3] [ b11 ]") != std::string::npos);

        PageObservation empty;
        empty.screenshot = {ScreenshotArtifact::Kind::TextRender, "nothing here\n"};
        auto e = annotate_marks(empty);
        CHECK(e.marks.empty());
        CHECK(e.observation.screenshot == empty.screenshot);
    }

    TEST_CASE("overlapping elements both get visible labels") {
        Image img(240, 120);
        PageObservation obs;
        obs.page_width = 240;
        obs.page_height = 120;
        obs.elements = {{1, ElementRole::Button, "A", {}, {20, 20, 120, 40}}, {2, ElementRole::Button, "B", {}, {24, 24, 120, 40}}};
        obs.screenshot = {ScreenshotArtifact::Kind::Image, encode_png(img)};
        auto m = annotate_marks(obs);
        REQUIRE(m.label_boxes.size() == 2);
        const auto& a = m.label_boxes.at(1);
        const auto& b = m.label_boxes.at(2);
        CHECK(a != b);
        auto covers = [](const BoundingBox& outer, const BoundingBox& inner) {
            return inner.x >= outer.x && inner.y >= outer.y && inner.x + inner.width <= outer.x + outer.width &&
                   inner.y + inner.height <= outer.y + outer.height;
        };
        CHECK_FALSE(covers(a, b));
        CHECK_FALSE(covers(b, a));

        auto out = decode_image(m.observation.screenshot.payload);
        CHECK(out.width() == 240);
        int changed = 0;
        for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x) changed += out.at(x, y) != img.at(x, y);
        CHECK(changed > 0);
        // Each label has ink that the other does not cover.
        auto inked = [&](const BoundingBox& box, const BoundingBox& other) {
            for (int y = box.y; y < box.y + box.height; ++y)
                for (int x = box.x; x < box.x + box.width; ++x)
                    if (!other.contains(x, y) && out.at(x, y) != img.at(x, y)) return true;
            return false;
        };
        CHECK(inked(a, b));
        CHECK(inked(b, a));
    }

    TEST_CASE("images roundtrip through PNG and PPM") {
        Image img(17, 9, {10, 20, 30});
        img.stroke_rect({2, 2, 10, 5}, {255, 0, 0}, 1);
        img.draw_number(1, 1, 42, {0, 0, 255}, 1);
        CHECK(decode_image(encode_png(img)) == img);
        CHECK(decode_image(encode_ppm(img)) == img);
        CHECK(screenshot_media_type(encode_png(img)) == "image/png");
        CHECK_THROWS_AS(decode_image("not an image"), Error);
    }

    TEST_CASE("simplified DOM respects its token budget") {
        PageObservation obs;
        for (int i = 1; i <= 200; ++i)
            obs.elements.push_back({i, ElementRole::Link, "Listing number " + std::to_string(i), {}, {0, i * 20, 100, 10}});
        auto dom = simplified_dom(obs, 100);
        CHECK(text::count_tokens(dom) <= 100);
        CHECK(dom.find("mark=\"1\"") != std::string::npos);
        obs.dom_snapshot = dom;
        CHECK(check_observation(obs).empty());
        // A mark token without an element is inconsistent.
        obs.dom_snapshot += "\n<a mark=\"999\">ghost</a>";
        CHECK_FALSE(check_observation(obs).empty());
    }

    TEST_CASE("property: simulator runs are deterministic and failed commands are inert") {
        std::mt19937 rng(2024);
        for (int run = 0; run < 200; ++run) {
            std::vector<BrowserCommand> cmds;
            for (int i = 0; i < 12; ++i) cmds.push_back(random_command(rng));
            auto s1 = home_session();
            auto s2 = home_session();
            for (const auto& c : cmds) {
                auto before = observation_hash(s1.observe());
                auto r1 = s1.execute(c);
                auto r2 = s2.execute(c);
                CHECK(r1.status == r2.status);
                auto h1 = observation_hash(s1.observe());
                REQUIRE(h1 == observation_hash(s2.observe()));
                if (!r1.ok()) CHECK(h1 == before);
                CHECK(check_observation(s1.observe()).empty());
            }
        }
    }

    TEST_CASE("property: annotate_marks is a pure function") {
        std::mt19937 rng(5);
        for (int run = 0; run < 50; ++run) {
            auto s = home_session();
            for (int i = 0; i < 6; ++i) s.execute(random_command(rng));
            auto obs = s.observe();
            auto a = annotate_marks(obs);
            auto b = annotate_marks(obs);
            CHECK(a.observation == b.observation);
            CHECK(a.marks == b.marks);
            CHECK(a.driver_ids == b.driver_ids);
            for (const auto& [mark, e] : a.marks) CHECK(e.mark_id == mark);
        }
    }
}
