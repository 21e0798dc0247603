#include "incidence/table.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "incidence/errors.hpp"

namespace incidence {

namespace {

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// One CSV record (handles quoted fields and embedded newlines). Returns false
// at end of input.
bool read_record(const std::string& text, std::size_t& pos, std::vector<std::string>& out) {
    out.clear();
    if (pos >= text.size()) return false;
    std::string field;
    bool in_quotes = false;
    for (;;) {
        if (pos >= text.size()) {
            out.push_back(field);
            return true;
        }
        char c = text[pos++];
        if (in_quotes) {
            if (c == '"') {
                if (pos < text.size() && text[pos] == '"') {
                    field += '"';
                    ++pos;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c == '\n') {
            out.push_back(field);
            return true;
        } else if (c == '\r') {
            if (pos < text.size() && text[pos] == '\n') ++pos;
            out.push_back(field);
            return true;
        } else {
            field += c;
        }
    }
}

bool parse_double(const std::string& s, double* out) {
    if (s.empty()) return false;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return false;
    *out = v;
    return true;
}

}  // namespace

int Table::add_column(const std::string& name) {
    if (index_.count(name)) throw ConfigError("duplicate column: " + name);
    int idx = static_cast<int>(cols_.size());
    names_.push_back(name);
    cols_.emplace_back();
    labels_.emplace_back();
    label_ids_.emplace_back();
    index_[name] = idx;
    if (idx > 0) cols_[idx].reserve(cols_[0].capacity());
    return idx;
}

int Table::column_index(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

int Table::require_column(const std::string& name) const {
    int idx = column_index(name);
    if (idx < 0) throw ConfigError("missing column: " + name);
    return idx;
}

double Table::intern_label(int idx, const std::string& label) {
    auto& ids = label_ids_[idx];
    auto it = ids.find(label);
    if (it != ids.end()) return it->second;
    int code = static_cast<int>(labels_[idx].size());
    labels_[idx].push_back(label);
    ids[label] = code;
    return code;
}

const std::string& Table::label_of(int idx, double code) const {
    const auto& lab = labels_[idx];
    auto k = static_cast<std::size_t>(code);
    if (k >= lab.size()) throw ConfigError("label code out of range in column " + names_[idx]);
    return lab[k];
}

std::vector<int> Table::group_ids(const std::vector<std::string>& key_columns) const {
    std::vector<const std::vector<double>*> keys;
    for (const auto& name : key_columns) keys.push_back(&col(name));
    std::vector<int> ids(rows());
    std::unordered_map<std::string, int> seen;
    std::string buf;
    for (std::size_t i = 0; i < rows(); ++i) {
        buf.clear();
        for (const auto* k : keys) {
            char tmp[32];
            std::snprintf(tmp, sizeof(tmp), "%.12g|", (*k)[i]);
            buf += tmp;
        }
        auto it = seen.find(buf);
        if (it == seen.end()) {
            int g = static_cast<int>(seen.size());
            seen.emplace(buf, g);
            ids[i] = g;
        } else {
            ids[i] = it->second;
        }
    }
    return ids;
}

Table Table::select_rows(const std::vector<int>& row_index) const {
    Table out;
    out.names_ = names_;
    out.index_ = index_;
    out.labels_ = labels_;
    out.label_ids_ = label_ids_;
    out.cols_.resize(cols_.size());
    for (std::size_t c = 0; c < cols_.size(); ++c) {
        out.cols_[c].reserve(row_index.size());
        for (int r : row_index) out.cols_[c].push_back(cols_[c][r]);
    }
    return out;
}

std::string Table::to_csv() const {
    std::string out;
    for (std::size_t c = 0; c < names_.size(); ++c) {
        if (c) out += ',';
        out += needs_quoting(names_[c]) ? quoted(names_[c]) : names_[c];
    }
    out += '\n';
    for (std::size_t r = 0; r < rows(); ++r) {
        for (std::size_t c = 0; c < cols_.size(); ++c) {
            if (c) out += ',';
            if (!labels_[c].empty()) {
                const std::string& s = label_of(static_cast<int>(c), cols_[c][r]);
                out += needs_quoting(s) ? quoted(s) : s;
            } else {
                out += format_number(cols_[c][r]);
            }
        }
        out += '\n';
    }
    return out;
}

void Table::write_csv(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    f << to_csv();
}

Table Table::from_csv_text(const std::string& text) {
    Table t;
    std::size_t pos = 0;
    std::vector<std::string> rec;
    if (!read_record(text, pos, rec)) throw ConfigError("empty CSV");
    for (const auto& name : rec) t.add_column(name);
    while (read_record(text, pos, rec)) {
        if (rec.size() == 1 && rec[0].empty()) continue;  // trailing newline
        if (rec.size() != t.cols_.size())
            throw ConfigError("CSV row has " + std::to_string(rec.size()) + " fields, expected " +
                              std::to_string(t.cols_.size()));
        for (std::size_t c = 0; c < rec.size(); ++c) {
            double v;
            if (!t.labels_[c].empty()) {
                v = t.intern_label(static_cast<int>(c), rec[c]);
            } else if (rec[c].empty()) {
                v = std::numeric_limits<double>::quiet_NaN();  // missing value
            } else if (!parse_double(rec[c], &v)) {
                if (!t.cols_[c].empty())
                    throw ConfigError("column " + t.names_[c] + " mixes numbers and labels");
                v = t.intern_label(static_cast<int>(c), rec[c]);
            }
            t.cols_[c].push_back(v);
        }
    }
    return t;
}

Table Table::read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return from_csv_text(ss.str());
}

}  // namespace incidence
