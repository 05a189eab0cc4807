#pragma once

// Set-of-Marks annotation: numbered labels over interactive elements.

#include "ata/browser.hpp"

#include <map>
#include <optional>
#include <vector>

namespace ata {

struct MarkedObservation {
    /// Copy of the input with dense mark ids and an annotated screenshot.
    PageObservation observation;
    std::map<int, ElementDescriptor> marks;
    /// Where each numeric label was drawn (IMAGE screenshots only).
    std::map<int, BoundingBox> label_boxes;
    /// Dense mark id -> the id the driver used in the raw observation.
    std::map<int, int> driver_ids;

    const ElementDescriptor* element(int mark_id) const;
    /// Driver-level id for a dense mark; nullopt when out of range.
    std::optional<int> driver_id(int mark_id) const;
};

/// Renumbers elements 1..n in document order and labels the screenshot:
/// numbered boxes for IMAGE payloads, `[n] ` prefixes for TEXT_RENDER lines.
/// Pure function of its input.
MarkedObservation annotate_marks(const PageObservation& obs);

}  // namespace ata
