#include "repairgraph/sandbox/traceback.hpp"

#include <cctype>
#include <sstream>
#include <vector>

namespace repairgraph::sandbox {

namespace {

struct Frame {
    std::string file;
    int line = 0;
    std::optional<std::string> function;
};

bool identifier_like(const std::string& text) {
    if (text.empty()) return false;
    if (std::isalpha(static_cast<unsigned char>(text[0])) == 0 && text[0] != '_') return false;
    for (const char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) == 0 && c != '_' && c != '.') return false;
    }
    return true;
}

// Matches `File "<name>", line <n>` with an optional `, in <func>` tail.
std::optional<Frame> parse_frame(const std::string& line) {
    const std::string marker = "File \"";
    const auto start = line.find(marker);
    if (start == std::string::npos) return std::nullopt;
    const auto name_begin = start + marker.size();
    const auto name_end = line.find('"', name_begin);
    if (name_end == std::string::npos) return std::nullopt;

    const std::string line_marker = "\", line ";
    if (line.compare(name_end, line_marker.size(), line_marker) != 0) return std::nullopt;
    auto pos = name_end + line_marker.size();
    if (pos >= line.size() || std::isdigit(static_cast<unsigned char>(line[pos])) == 0) {
        return std::nullopt;
    }
    int number = 0;
    while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos])) != 0) {
        number = number * 10 + (line[pos] - '0');
        ++pos;
    }

    Frame frame;
    frame.file = line.substr(name_begin, name_end - name_begin);
    frame.line = number;
    const std::string in_marker = ", in ";
    if (line.compare(pos, in_marker.size(), in_marker) == 0) {
        std::string func = line.substr(pos + in_marker.size());
        while (!func.empty() && (func.back() == '\r' || func.back() == ' ')) func.pop_back();
        if (!func.empty()) frame.function = func;
    }
    return frame;
}

}  // namespace

StructuredError parse_traceback(const std::string& text) {
    std::vector<Frame> frames;
    std::string last_type;
    std::string last_message;

    std::istringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
        while (!line.empty() && line.back() == '\r') line.pop_back();
        if (auto frame = parse_frame(line)) {
            frames.push_back(std::move(*frame));
            continue;
        }
        // exception line: `SomeError: message` or a bare class name
        if (line.empty() || std::isspace(static_cast<unsigned char>(line[0])) != 0) continue;
        const auto colon = line.find(':');
        if (colon != std::string::npos) {
            const std::string head = line.substr(0, colon);
            if (identifier_like(head)) {
                last_type = head;
                auto rest = line.substr(colon + 1);
                if (!rest.empty() && rest.front() == ' ') rest.erase(rest.begin());
                last_message = rest;
            }
        } else if (identifier_like(line)) {
            last_type = line;
            last_message.clear();
        }
    }

    StructuredError err;
    err.traceback_text = text;
    if (last_type.empty()) {
        err.error_type = "UnknownError";
        err.message = text;
        return err;
    }
    err.error_type = last_type;
    err.message = last_message;

    const Frame* chosen = nullptr;
    for (const Frame& frame : frames) {
        if (frame.file == "source.py") chosen = &frame;
    }
    if (chosen == nullptr && !frames.empty()) chosen = &frames.back();
    if (chosen != nullptr) {
        err.line = chosen->line;
        err.function = chosen->function;
    }
    return err;
}

}  // namespace repairgraph::sandbox
