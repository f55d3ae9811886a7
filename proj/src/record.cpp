#include "rtec/record.hpp"

namespace rtec {

const char* to_string(Action a) {
    switch (a) {
        case Action::Assert: return "assert";
        case Action::Retract: return "retract";
        case Action::Update: return "update";
    }
    return "?";
}

const char* to_string(RecordKind k) {
    switch (k) {
        case RecordKind::Event: return "event";
        case RecordKind::Interval: return "interval";
        case RecordKind::Coord: return "coord";
    }
    return "?";
}

}  // namespace rtec
