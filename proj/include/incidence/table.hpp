#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace incidence {

// Column-oriented table of doubles. Non-numeric CSV cells are interned into
// per-column category labels and stored as their code, so group keys and
// class columns ride along with the numeric data.
class Table {
  public:
    int add_column(const std::string& name);
    int column_index(const std::string& name) const;  // -1 when absent
    int require_column(const std::string& name) const;

    std::vector<double>& col(int idx) { return cols_[idx]; }
    const std::vector<double>& col(int idx) const { return cols_[idx]; }
    std::vector<double>& col(const std::string& name) { return cols_[require_column(name)]; }
    const std::vector<double>& col(const std::string& name) const {
        return cols_[require_column(name)];
    }

    const std::vector<std::string>& names() const { return names_; }
    std::size_t rows() const { return cols_.empty() ? 0 : cols_[0].size(); }
    std::size_t columns() const { return cols_.size(); }

    // Category handling for label-valued columns.
    bool is_categorical(int idx) const { return !labels_.at(idx).empty(); }
    double intern_label(int idx, const std::string& label);
    const std::string& label_of(int idx, double code) const;

    // Dense group ids (first-appearance order) from one or more key columns.
    std::vector<int> group_ids(const std::vector<std::string>& key_columns) const;

    Table select_rows(const std::vector<int>& row_index) const;

    void write_csv(const std::string& path) const;  // RFC-4180, "%.12g" numbers
    std::string to_csv() const;
    static Table read_csv(const std::string& path);
    static Table from_csv_text(const std::string& text);

  private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> cols_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::vector<std::string>> labels_;                  // per column: code -> label
    std::vector<std::unordered_map<std::string, int>> label_ids_;  // per column: label -> code
};

}  // namespace incidence
