#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rtec/interval.hpp"

namespace rtec {

enum class Action { Assert, Retract, Update };
enum class RecordKind { Event, Interval, Coord };

/// One line of an input stream.
struct InputRecord {
    std::string id;
    std::optional<Timepoint> arrival;  // absent: in order
    Action action = Action::Assert;
    RecordKind kind = RecordKind::Event;

    // Event and Interval payloads.
    std::string name;
    std::vector<std::string> args;
    std::string value = "true";  // Interval only
    Timepoint t = 0;             // Event, Coord
    Timepoint from = 0;          // Interval
    Timepoint to = kOpen;        // Interval; kOpen for an unknown end

    // Coord payload.
    std::string entity;
    double x = 0;
    double y = 0;

    /// Time at which the record's content begins.
    Timepoint occurrence() const { return kind == RecordKind::Interval ? from : t; }
    /// Last timepoint covered by the content.
    Timepoint last_point() const {
        if (kind != RecordKind::Interval) return t;
        return to == kOpen ? kOpen : to - 1;
    }

    friend bool operator==(const InputRecord&, const InputRecord&) = default;
};

const char* to_string(Action a);
const char* to_string(RecordKind k);

}  // namespace rtec
