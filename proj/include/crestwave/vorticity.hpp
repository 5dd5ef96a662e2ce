#pragma once

#include "crestwave/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace crestwave {

enum class ExtensionPolicy { extend, strict };

// Polynomial vorticity omega(psi) = sum c_k psi^k, trusted on [1 - delta, 1].
class VorticityModel {
public:
    VorticityModel() : VorticityModel(std::vector<double>{0.0}) {}

    explicit VorticityModel(std::vector<double> coeffs, double delta = 0.5,
                            ExtensionPolicy policy = ExtensionPolicy::extend)
        : coeffs_(std::move(coeffs)), delta_(delta), policy_(policy) {
        if (coeffs_.empty()) coeffs_.push_back(0.0);
        if (!(delta_ > 0.0) || !std::isfinite(delta_))
            throw DomainError("vorticity: delta must be positive, got " + std::to_string(delta_));
        for (double c : coeffs_)
            if (!std::isfinite(c)) throw DomainError("vorticity: non-finite coefficient");
    }

    static VorticityModel constant(double c, double delta = 0.5) { return VorticityModel({c}, delta); }

    const std::vector<double>& coeffs() const { return coeffs_; }
    double delta() const { return delta_; }
    ExtensionPolicy policy() const { return policy_; }
    double omega_at_one() const { return horner(coeffs_, 1.0); }
    double omega_prime_at_one() const { return derivative(1.0); }

    // Callers that evaluate outside the band record it themselves (see the strip solver).
    bool in_band(double psi) const {
        return psi >= 1.0 - delta_ - kExtensionSlack && psi <= 1.0 + kExtensionSlack;
    }

    double value(double psi) const {
        check(psi);
        return horner(coeffs_, psi);
    }

    double derivative(double psi) const {
        double acc = 0.0;
        for (std::size_t k = coeffs_.size(); k-- > 1;) acc = acc * psi + static_cast<double>(k) * coeffs_[k];
        return acc;
    }

    // Integral from 0 to psi; exact for the polynomial.
    double primitive(double psi) const {
        check(psi);
        double acc = 0.0;
        for (std::size_t k = coeffs_.size(); k-- > 0;) acc = acc * psi + coeffs_[k] / static_cast<double>(k + 1);
        return acc * psi;
    }

    nlohmann::json to_json() const { return {{"coeffs", coeffs_}, {"delta", delta_}}; }

    static VorticityModel from_json(const nlohmann::json& j, ExtensionPolicy policy = ExtensionPolicy::extend) {
        if (!j.is_object() || !j.contains("coeffs") || !j["coeffs"].is_array())
            throw DomainError("vorticity: JSON must be an object with a \"coeffs\" array");
        for (auto it = j.begin(); it != j.end(); ++it)
            if (it.key() != "coeffs" && it.key() != "delta")
                throw DomainError("vorticity: unknown key \"" + it.key() + "\"");
        std::vector<double> c;
        for (const auto& v : j["coeffs"]) {
            if (!v.is_number()) throw DomainError("vorticity: coefficients must be numbers");
            c.push_back(v.get<double>());
        }
        double delta = j.contains("delta") ? j["delta"].get<double>() : 0.5;
        return VorticityModel(std::move(c), delta, policy);
    }

private:
    static double horner(const std::vector<double>& c, double x) {
        double acc = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
        return acc;
    }

    static constexpr double kExtensionSlack = 1e-12;

    void check(double psi) const {
        if (policy_ == ExtensionPolicy::strict && !in_band(psi))
            throw DomainError("vorticity: psi = " + std::to_string(psi) + " outside [1 - delta, 1]");
    }

    std::vector<double> coeffs_;
    double delta_;
    ExtensionPolicy policy_;
};

inline double omega(const VorticityModel& m, double psi) { return m.value(psi); }

// omega_hat(p) = omega(1 - p)
inline double omega_hat(const VorticityModel& m, double p) { return m.value(1.0 - p); }

inline double omega_primitive(const VorticityModel& m, double psi) { return m.primitive(psi); }

} // namespace crestwave
