#include "ccf/panel_io.hpp"

#include "ccf/errors.hpp"

#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace ccf {

namespace {

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cur;
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double number(const std::string& s, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        return v;
    } catch (const std::exception&) {
        throw InputError(fmt::format("panel line {}: bad number '{}'", line, s));
    }
}

struct TenorRows {
    double tau = 0.0, forward = 0.0, rate = 0.0;
    std::vector<double> u, re, im;
};

struct DateRows {
    std::map<int, TenorRows> tenors;
    std::vector<double> exogenous;
    std::map<int, Mat> blocks;
};

}  // namespace

void write_panel_csv(std::ostream& out, const std::vector<CCFMeasurement>& panel) {
    out << "date,tenor_index,tau,forward,rate,u,re_log_ccf,im_log_ccf,exogenous\n";
    for (const auto& m : panel) {
        const auto q = static_cast<Eigen::Index>(m.u_grid.size());
        const std::string exo = m.exogenous.size() > 0 ? fmt::format("{:.17g}", m.exogenous(0)) : std::string{};
        for (std::size_t k = 0; k < m.taus.size(); ++k) {
            const Eigen::Index off = static_cast<Eigen::Index>(k) * 2 * q;
            for (Eigen::Index i = 0; i < q; ++i) {
                out << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", format_date(m.date), k,
                                   m.taus[k], m.forwards[k], m.rates[k], m.u_grid[i], m.y(off + i), m.y(off + q + i),
                                   exo);
            }
        }
    }
}

void write_covariance_csv(std::ostream& out, const std::vector<CCFMeasurement>& panel) {
    out << "date,tenor_index,row,col,value\n";
    for (const auto& m : panel) {
        for (std::size_t k = 0; k < m.H_blocks.size(); ++k) {
            const Mat& h = m.H_blocks[k];
            for (Eigen::Index r = 0; r < h.rows(); ++r)
                for (Eigen::Index c = r; c < h.cols(); ++c)
                    out << fmt::format("{},{},{},{},{:.17g}\n", format_date(m.date), k, r, c, h(r, c));
        }
    }
}

std::vector<CCFMeasurement> read_panel_csv(std::istream& panel, std::istream& covariance) {
    std::map<Date, DateRows> rows;
    std::string line;
    if (!std::getline(panel, line) || line.rfind("date,tenor_index,tau", 0) != 0) {
        throw InputError("panel file header must start with date,tenor_index,tau");
    }
    std::size_t n = 1;
    while (std::getline(panel, line)) {
        ++n;
        if (line.empty()) continue;
        const auto f = fields(line);
        if (f.size() < 8) throw InputError(fmt::format("panel line {}: expected at least 8 fields", n));
        auto& dr = rows[parse_date(f[0])];
        auto& tr = dr.tenors[static_cast<int>(number(f[1], n))];
        tr.tau = number(f[2], n);
        tr.forward = number(f[3], n);
        tr.rate = number(f[4], n);
        tr.u.push_back(number(f[5], n));
        tr.re.push_back(number(f[6], n));
        tr.im.push_back(number(f[7], n));
        if (f.size() > 8 && !f[8].empty() && dr.exogenous.empty()) dr.exogenous.push_back(number(f[8], n));
    }
    if (!std::getline(covariance, line) || line.rfind("date,tenor_index,row,col,value", 0) != 0) {
        throw InputError("covariance file header must be date,tenor_index,row,col,value");
    }
    n = 1;
    while (std::getline(covariance, line)) {
        ++n;
        if (line.empty()) continue;
        const auto f = fields(line);
        if (f.size() < 5) throw InputError(fmt::format("covariance line {}: expected 5 fields", n));
        const Date date = parse_date(f[0]);
        auto it = rows.find(date);
        if (it == rows.end()) throw InputError(fmt::format("covariance line {}: date not in panel", n));
        const int k = static_cast<int>(number(f[1], n));
        const auto tr = it->second.tenors.find(k);
        if (tr == it->second.tenors.end()) throw InputError(fmt::format("covariance line {}: unknown tenor", n));
        const auto dim = static_cast<Eigen::Index>(2 * tr->second.u.size());
        auto [bit, inserted] = it->second.blocks.try_emplace(k, Mat::Zero(dim, dim));
        const auto r = static_cast<Eigen::Index>(number(f[2], n));
        const auto c = static_cast<Eigen::Index>(number(f[3], n));
        if (r >= dim || c >= dim) throw InputError(fmt::format("covariance line {}: index out of range", n));
        const double v = number(f[4], n);
        bit->second(r, c) = v;
        bit->second(c, r) = v;
    }

    std::vector<CCFMeasurement> out;
    out.reserve(rows.size());
    for (auto& [date, dr] : rows) {
        CCFMeasurement m;
        m.date = date;
        m.u_grid = dr.tenors.begin()->second.u;
        const auto q = static_cast<Eigen::Index>(m.u_grid.size());
        m.y = Vec(q * 2 * static_cast<Eigen::Index>(dr.tenors.size()));
        Eigen::Index off = 0;
        for (auto& [k, tr] : dr.tenors) {
            if (tr.u != m.u_grid) throw InputError(fmt::format("panel {}: u grid differs across tenors", format_date(date)));
            m.taus.push_back(tr.tau);
            m.forwards.push_back(tr.forward);
            m.rates.push_back(tr.rate);
            for (Eigen::Index i = 0; i < q; ++i) {
                m.y(off + i) = tr.re[i];
                m.y(off + q + i) = tr.im[i];
            }
            off += 2 * q;
            auto b = dr.blocks.find(k);
            if (b == dr.blocks.end()) {
                throw InputError(fmt::format("panel {}: missing covariance block for tenor {}", format_date(date), k));
            }
            m.H_blocks.push_back(std::move(b->second));
        }
        if (!dr.exogenous.empty()) m.exogenous = Eigen::Map<Vec>(dr.exogenous.data(), dr.exogenous.size());
        out.push_back(std::move(m));
    }
    return out;
}

void write_filter_csv(std::ostream& out, const PreparedPanel& panel, const FilterRun& run) {
    out << "date,predicted_v,predicted_var,filtered_v,filtered_var,omega,G,gls_quad,log_det_H_star,loglik\n";
    for (std::size_t t = 0; t < run.steps.size(); ++t) {
        const auto& s = run.steps[t];
        out << fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n",
                           format_date(panel.measurements[t].date), s.predicted(0), s.predicted_P(0, 0), s.filtered(0),
                           s.filtered_P(0, 0), s.omega(0), s.G(0, 0), s.gls_quad, s.log_det_H_star, s.loglik);
    }
}

}  // namespace ccf
