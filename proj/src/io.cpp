#include <l0group/io.hpp>
#include <l0group/error.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace l0group {

namespace {

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << std::setprecision(17);
    return out;
}

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& token, const std::string& path, long line)
{
    const std::string t = trim(token);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (t.empty() || used != t.size()) {
        std::ostringstream msg;
        msg << path << ":" << line << ": cannot parse '" << t << "' as a number";
        throw InputError(msg.str());
    }
    return v;
}

} // namespace

Matrix read_csv_matrix(const std::string& path, bool skip_header)
{
    auto in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skip_header && lineno == 1) continue;
        if (trim(line).empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell, path, lineno));
        if (!rows.empty() && row.size() != rows.front().size()) {
            std::ostringstream msg;
            msg << path << ":" << lineno << ": expected " << rows.front().size() << " columns, found " << row.size();
            throw InputError(msg.str());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError(path + ": no data rows");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

Vector read_csv_vector(const std::string& path, bool skip_header)
{
    const Matrix m = read_csv_matrix(path, skip_header);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    throw InputError(path + ": expected a single column or a single row");
}

void write_csv_matrix(const std::string& path, const Matrix& m, const std::string& header)
{
    auto out = open_out(path);
    if (!header.empty()) out << header << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ",";
            out << m(i, j);
        }
        out << "\n";
    }
}

void write_csv_vector(const std::string& path, const Vector& v)
{
    auto out = open_out(path);
    for (Eigen::Index i = 0; i < v.size(); ++i) out << v[i] << "\n";
}

GroupPartition read_groups(const std::string& path)
{
    auto in = open_in(path);
    std::vector<std::vector<int>> groups;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<int> grp;
        while (ss >> tok) {
            std::size_t used = 0;
            int v = -1;
            try {
                v = std::stoi(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size()) {
                std::ostringstream msg;
                msg << path << ":" << lineno << ": bad column index '" << tok << "'";
                throw InputError(msg.str());
            }
            grp.push_back(v);
        }
        groups.push_back(std::move(grp));
    }
    try {
        return GroupPartition(std::move(groups));
    } catch (const PreconditionError& e) {
        throw InputError(path + ": " + e.what());
    }
}

void write_groups(const std::string& path, const GroupPartition& partition)
{
    auto out = open_out(path);
    for (const auto& grp : partition.groups()) {
        for (std::size_t i = 0; i < grp.size(); ++i) out << (i ? " " : "") << grp[i];
        out << "\n";
    }
}

std::map<std::string, std::string> read_config(const std::string& path)
{
    auto in = open_in(path);
    std::map<std::string, std::string> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << path << ":" << lineno << ": expected key=value";
            throw InputError(msg.str());
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

} // namespace l0group
