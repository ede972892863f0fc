#include "chronocast/boxjenkins.hpp"

#include "chronocast/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace chronocast::boxjenkins {
namespace {

constexpr std::array<double, 40> kChiSquare95{
    3.841459,  5.991465,  7.814728,  9.487729,  11.070498, 12.591587, 14.067140, 15.507313,
    16.918978, 18.307038, 19.675138, 21.026070, 22.362032, 23.684791, 24.995790, 26.296228,
    27.587112, 28.869299, 30.143527, 31.410433, 32.670573, 33.924438, 35.172462, 36.415029,
    37.652484, 38.885139, 40.113272, 41.337138, 42.556968, 43.772972, 44.985343, 46.194260,
    47.399884, 48.602367, 49.801850, 50.998460, 52.192320, 53.383541, 54.572228, 55.758479,
};

// Product of 1 + sign*sum(c_i B^i) and 1 + sign*sum(C_j B^(j*s)), returned as lag coefficients
// k = 1..deg with the same sign convention.
std::vector<double> expand(std::span<const double> c, std::span<const double> seasonal, int s, double sign) {
	const std::size_t deg = c.size() + seasonal.size() * static_cast<std::size_t>(s);
	std::vector<double> a(c.size() + 1, 0.0), b(seasonal.size() * static_cast<std::size_t>(s) + 1, 0.0);
	a[0] = 1.0;
	b[0] = 1.0;
	for (std::size_t i = 0; i < c.size(); ++i) {
		a[i + 1] = sign * c[i];
	}
	for (std::size_t j = 0; j < seasonal.size(); ++j) {
		b[(j + 1) * static_cast<std::size_t>(s)] = sign * seasonal[j];
	}
	std::vector<double> prod(deg + 1, 0.0);
	for (std::size_t i = 0; i < a.size(); ++i) {
		for (std::size_t j = 0; j < b.size(); ++j) {
			prod[i + j] += a[i] * b[j];
		}
	}
	std::vector<double> lags(deg);
	for (std::size_t k = 1; k <= deg; ++k) {
		lags[k - 1] = sign * prod[k];
	}
	return lags;
}

struct Layout {
	std::size_t p, q, P, Q, exog;
	bool intercept;

	std::size_t size() const { return p + q + P + Q + (intercept ? 1 : 0) + exog; }
};

struct Coefficients {
	std::vector<double> ar, ma, sar, sma, exog;
	double mu = 0;
};

Coefficients unpack(std::span<const double> theta, const Layout &layout) {
	Coefficients c;
	auto take = [&](std::size_t &pos, std::size_t n) {
		std::vector<double> out(theta.begin() + static_cast<std::ptrdiff_t>(pos),
		                        theta.begin() + static_cast<std::ptrdiff_t>(pos + n));
		pos += n;
		return out;
	};
	std::size_t pos = 0;
	c.ar = take(pos, layout.p);
	c.ma = take(pos, layout.q);
	c.sar = take(pos, layout.P);
	c.sma = take(pos, layout.Q);
	if (layout.intercept) {
		c.mu = theta[pos++];
	}
	c.exog = take(pos, layout.exog);
	return c;
}

double exog_term(std::span<const double> coeffs, const Matrix *x, std::size_t row) {
	if (coeffs.empty()) {
		return 0.0;
	}
	const auto r = x->row(row);
	return std::inner_product(coeffs.begin(), coeffs.end(), r.begin(), 0.0);
}

// One-step residuals of the differenced series; x rows are aligned with w.
std::vector<double> css_residuals(std::span<const double> w, const Matrix *x, const Coefficients &c, int s,
                                  double presample) {
	const auto phi = expand(c.ar, c.sar, s, -1.0);
	const auto theta = expand(c.ma, c.sma, s, 1.0);
	std::vector<double> e(w.size());
	for (std::size_t t = 0; t < w.size(); ++t) {
		double v = w[t] - c.mu;
		for (std::size_t k = 1; k <= phi.size(); ++k) {
			const double lagged = t >= k ? w[t - k] : presample;
			v -= phi[k - 1] * (lagged - c.mu);
		}
		for (std::size_t k = 1; k <= theta.size() && k <= t; ++k) {
			v -= theta[k - 1] * e[t - k];
		}
		e[t] = v - exog_term(c.exog, x, t);
	}
	return e;
}

double sum_squares(std::span<const double> v) {
	double s = 0;
	for (double x : v) {
		s += x * x;
	}
	return s;
}

double max_root_modulus(std::span<const double> lag_coeffs, double sign) {
	// Polynomial 1 + sign*sum(c_k z^k); returns the largest |1/root| (companion eigenvalue modulus).
	std::size_t deg = lag_coeffs.size();
	while (deg > 0 && lag_coeffs[deg - 1] == 0.0) {
		--deg;
	}
	if (deg == 0) {
		return 0.0;
	}
	Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(deg), static_cast<Eigen::Index>(deg));
	for (std::size_t k = 0; k < deg; ++k) {
		companion(0, static_cast<Eigen::Index>(k)) = -sign * lag_coeffs[k];
	}
	for (std::size_t k = 1; k < deg; ++k) {
		companion(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = 1.0;
	}
	const Eigen::VectorXcd eig = companion.eigenvalues();
	return eig.cwiseAbs().maxCoeff();
}

void check_exog(const Matrix *x, std::size_t rows, const char *what) {
	if (x != nullptr && x->rows() != rows) {
		throw std::invalid_argument(std::string(what) + ": exogenous matrix has " + std::to_string(x->rows()) +
		                            " rows, expected " + std::to_string(rows));
	}
}

template <typename T>
void push_tail(std::vector<T> &tail, T value) {
	if (tail.empty()) {
		return;
	}
	std::rotate(tail.begin(), tail.begin() + 1, tail.end());
	tail.back() = value;
}

// Next differenced value predicted from the state, with future shocks at zero.
double predict_w(const ArimaModel &m, std::span<const double> phi, std::span<const double> theta,
                 std::span<const double> w_tail, std::span<const double> e_tail, double exog) {
	const double mu = m.has_intercept ? m.intercept : 0.0;
	double v = mu + exog;
	for (std::size_t k = 1; k <= phi.size(); ++k) {
		v += phi[k - 1] * (w_tail[w_tail.size() - k] - mu);
	}
	for (std::size_t k = 1; k <= theta.size(); ++k) {
		v += theta[k - 1] * e_tail[e_tail.size() - k];
	}
	return v;
}

// Continues the original series past `tail_y` given future differenced values.
std::vector<double> integrate(std::span<const double> tail_y, std::span<const double> future_w, const ArimaOrder &o) {
	Differenced anchor = difference(tail_y, o.d, o.D, o.s);
	std::vector<double> w = anchor.values;
	w.insert(w.end(), future_w.begin(), future_w.end());
	const auto full = undifference(w, anchor.state);
	return {full.end() - static_cast<std::ptrdiff_t>(future_w.size()), full.end()};
}

} // namespace

void ArimaOrder::validate() const {
	if (p < 0 || d < 0 || q < 0 || P < 0 || D < 0 || Q < 0 || s < 0) {
		throw std::invalid_argument("ARIMA orders must be non-negative");
	}
	if (s == 0 && (P != 0 || D != 0 || Q != 0)) {
		throw std::invalid_argument("seasonal orders require a season length s > 0");
	}
	if (s == 1) {
		throw std::invalid_argument("season length 1 duplicates the ordinary part; use s = 0 or s >= 2");
	}
}

Differenced difference(std::span<const double> y, int d, int D, int s) {
	if (d < 0 || D < 0) {
		throw std::invalid_argument("differencing orders must be non-negative");
	}
	if (D > 0 && s <= 0) {
		throw std::invalid_argument("seasonal differencing requires s > 0");
	}
	const std::size_t loss = static_cast<std::size_t>(d + D * s);
	if (y.size() <= loss) {
		throw DataError("series of length " + std::to_string(y.size()) + " too short for differencing");
	}
	Differenced out;
	out.state = {d, D, s, {}};
	std::vector<double> cur(y.begin(), y.end());
	auto stage = [&](std::size_t lag) {
		out.state.heads.emplace_back(cur.begin(), cur.begin() + static_cast<std::ptrdiff_t>(lag));
		std::vector<double> next(cur.size() - lag);
		for (std::size_t t = lag; t < cur.size(); ++t) {
			next[t - lag] = cur[t] - cur[t - lag];
		}
		cur = std::move(next);
	};
	for (int i = 0; i < D; ++i) {
		stage(static_cast<std::size_t>(s));
	}
	for (int i = 0; i < d; ++i) {
		stage(1);
	}
	out.values = std::move(cur);
	return out;
}

std::vector<double> undifference(std::span<const double> diffed, const DifferenceState &state) {
	if (state.heads.size() != static_cast<std::size_t>(state.d + state.D)) {
		throw std::invalid_argument("undifference: state does not match its orders");
	}
	std::vector<double> cur(diffed.begin(), diffed.end());
	for (std::size_t k = state.heads.size(); k-- > 0;) {
		const auto &head = state.heads[k];
		const std::size_t lag = k < static_cast<std::size_t>(state.D) ? static_cast<std::size_t>(state.s) : 1;
		if (head.size() != lag) {
			throw std::invalid_argument("undifference: head length mismatch");
		}
		std::vector<double> prev(head);
		prev.reserve(head.size() + cur.size());
		for (std::size_t t = 0; t < cur.size(); ++t) {
			prev.push_back(cur[t] + prev[t]);
		}
		cur = std::move(prev);
	}
	return cur;
}

int default_adf_lags(std::size_t n) {
	return static_cast<int>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

AdfResult adf_test(std::span<const double> y, std::optional<int> lags) {
	if (y.size() < 20) {
		throw DataError("ADF test needs at least 20 observations");
	}
	const int k = lags.value_or(default_adf_lags(y.size()));
	if (k < 0) {
		throw std::invalid_argument("ADF lag order must be non-negative");
	}
	const std::size_t n = y.size();
	std::vector<double> dy(n - 1);
	for (std::size_t t = 1; t < n; ++t) {
		dy[t - 1] = y[t] - y[t - 1];
	}
	const auto uk = static_cast<std::size_t>(k);
	if (dy.size() <= uk + 3) {
		throw DataError("ADF lag order too large for the series");
	}
	// Regress dy[t] on (1, y[t], dy[t-1..t-k]) for t = k .. n-2 (dy[t] = y[t+1] - y[t]).
	const auto rows = static_cast<Eigen::Index>(dy.size() - uk);
	const auto cols = static_cast<Eigen::Index>(2 + uk);
	Eigen::MatrixXd x(rows, cols);
	Eigen::VectorXd target(rows);
	for (Eigen::Index r = 0; r < rows; ++r) {
		const std::size_t t = uk + static_cast<std::size_t>(r);
		target(r) = dy[t];
		x(r, 0) = 1.0;
		x(r, 1) = y[t];
		for (std::size_t i = 1; i <= uk; ++i) {
			x(r, static_cast<Eigen::Index>(1 + i)) = dy[t - i];
		}
	}
	const Eigen::MatrixXd xtx = x.transpose() * x;
	const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xtx);
	if (qr.rank() < cols) {
		throw ModelError("ADF regression is singular");
	}
	const Eigen::VectorXd beta = qr.solve(x.transpose() * target);
	const double rss = (target - x * beta).squaredNorm();
	const double sigma2 = rss / static_cast<double>(rows - cols);
	const Eigen::MatrixXd cov = qr.inverse() * sigma2;
	const double se = std::sqrt(cov(1, 1));
	if (!(se > 0) || !std::isfinite(se)) {
		throw ModelError("ADF regression is singular");
	}
	AdfResult r;
	r.statistic = beta(1) / se;
	r.lags = k;
	r.n_obs = static_cast<std::size_t>(rows);
	r.critical_value = kAdfCritical5pct;
	r.rejects_unit_root = r.statistic < kAdfCritical5pct;
	return r;
}

double chi_square_critical_95(int df) {
	if (df < 1 || df > static_cast<int>(kChiSquare95.size())) {
		throw std::invalid_argument("chi-square table covers df 1..40");
	}
	return kChiSquare95[static_cast<std::size_t>(df - 1)];
}

LjungBoxResult ljung_box(std::span<const double> residuals, int lags, int fitted_params) {
	if (lags < 1 || residuals.size() <= static_cast<std::size_t>(lags)) {
		throw std::invalid_argument("ljung_box: need 1 <= lags < length");
	}
	const int df = lags - fitted_params;
	if (df < 1) {
		throw std::invalid_argument("ljung_box: lags must exceed the fitted parameter count");
	}
	const std::size_t n = residuals.size();
	const double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / static_cast<double>(n);
	double denom = 0;
	for (double v : residuals) {
		denom += (v - mean) * (v - mean);
	}
	if (!(denom > 0)) {
		throw std::invalid_argument("ljung_box: constant residuals");
	}
	double q = 0;
	for (int k = 1; k <= lags; ++k) {
		const auto uk = static_cast<std::size_t>(k);
		double num = 0;
		for (std::size_t t = uk; t < n; ++t) {
			num += (residuals[t] - mean) * (residuals[t - uk] - mean);
		}
		const double rho = num / denom;
		q += rho * rho / static_cast<double>(n - uk);
	}
	const double nd = static_cast<double>(n);
	LjungBoxResult r;
	r.q = nd * (nd + 2.0) * q;
	r.df = df;
	r.critical_value = chi_square_critical_95(df);
	r.white_noise = r.q <= r.critical_value;
	return r;
}

std::vector<double> ArimaModel::ar_lags() const { return expand(ar, seasonal_ar, order.s, -1.0); }

std::vector<double> ArimaModel::ma_lags() const { return expand(ma, seasonal_ma, order.s, 1.0); }

ArimaModel fit(std::span<const double> y, const ArimaOrder &order, const Matrix *exog, const FitOptions &options) {
	order.validate();
	check_exog(exog, y.size(), "fit");
	const std::size_t k_exog = exog != nullptr ? exog->cols() : 0;
	const Differenced diffed = difference(y, order.d, order.D, order.s);
	const std::vector<double> &w = diffed.values;
	const std::size_t loss = order.differencing_loss();

	const Layout layout{static_cast<std::size_t>(order.p), static_cast<std::size_t>(order.q),
	                    static_cast<std::size_t>(order.P), static_cast<std::size_t>(order.Q), k_exog,
	                    order.d + order.D == 0};
	const std::size_t n_params = layout.size();
	if (w.size() <= 10 + n_params) {
		throw DataError("series too short: " + std::to_string(w.size()) + " differenced values for " +
		                std::to_string(n_params) + " parameters");
	}

	Matrix x_aligned;
	if (k_exog > 0) {
		x_aligned = Matrix(w.size(), k_exog);
		for (std::size_t t = 0; t < w.size(); ++t) {
			const auto src = exog->row(t + loss);
			std::copy(src.begin(), src.end(), x_aligned.row(t).begin());
		}
	}
	const Matrix *x = k_exog > 0 ? &x_aligned : nullptr;
	const double presample = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
	auto residuals_at = [&](std::span<const double> theta) {
		return css_residuals(w, x, unpack(theta, layout), order.s, presample);
	};

	// Levenberg-Marquardt (damped Gauss-Newton) from the zero vector; only decreasing steps are accepted.
	std::vector<double> theta(n_params, 0.0);
	std::vector<double> e = residuals_at(theta);
	double objective = sum_squares(e);
	std::vector<double> trace{objective};
	int iterations = 0;
	bool converged = n_params == 0;
	double lambda = 1e-3;
	const auto m = static_cast<Eigen::Index>(w.size());
	const auto np = static_cast<Eigen::Index>(n_params);
	while (!converged) {
		if (iterations >= options.max_iterations) {
			throw ConvergenceError("CSS optimizer hit the iteration cap of " + std::to_string(options.max_iterations),
			                       objective);
		}
		Eigen::MatrixXd jac(m, np);
		for (Eigen::Index j = 0; j < np; ++j) {
			const auto uj = static_cast<std::size_t>(j);
			const double h = 1e-6 * std::max(1.0, std::abs(theta[uj]));
			std::vector<double> plus = theta, minus = theta;
			plus[uj] += h;
			minus[uj] -= h;
			const auto ep = residuals_at(plus);
			const auto em = residuals_at(minus);
			for (Eigen::Index t = 0; t < m; ++t) {
				jac(t, j) = (ep[static_cast<std::size_t>(t)] - em[static_cast<std::size_t>(t)]) / (2.0 * h);
			}
		}
		const Eigen::Map<const Eigen::VectorXd> ev(e.data(), m);
		const Eigen::MatrixXd jtj = jac.transpose() * jac;
		const Eigen::VectorXd grad = jac.transpose() * ev;

		bool accepted = false;
		while (lambda < 1e16) {
			Eigen::MatrixXd damped = jtj;
			for (Eigen::Index j = 0; j < np; ++j) {
				damped(j, j) += lambda * std::max(jtj(j, j), 1e-12);
			}
			const Eigen::VectorXd step = damped.ldlt().solve(-grad);
			std::vector<double> candidate = theta;
			for (std::size_t j = 0; j < n_params; ++j) {
				candidate[j] += step(static_cast<Eigen::Index>(j));
			}
			auto e_new = residuals_at(candidate);
			const double obj_new = sum_squares(e_new);
			if (std::isfinite(obj_new) && obj_new < objective) {
				const double decrease = objective - obj_new;
				const double theta_norm = std::sqrt(sum_squares(theta));
				theta = std::move(candidate);
				e = std::move(e_new);
				objective = obj_new;
				trace.push_back(objective);
				lambda = std::max(lambda / 10.0, 1e-12);
				accepted = true;
				if (decrease <= options.objective_tolerance * (1.0 + objective) ||
				    step.norm() <= options.parameter_tolerance * (1.0 + theta_norm)) {
					converged = true;
				}
				break;
			}
			lambda *= 10.0;
		}
		++iterations;
		if (!accepted) {
			// No descent direction left at any damping: a numerical minimum.
			converged = true;
		}
	}

	const Coefficients c = unpack(theta, layout);
	ArimaModel model;
	model.order = order;
	model.ar = c.ar;
	model.ma = c.ma;
	model.seasonal_ar = c.sar;
	model.seasonal_ma = c.sma;
	model.exog_coeffs = c.exog;
	model.has_intercept = layout.intercept;
	model.intercept = c.mu;
	model.css = objective;
	model.n_effective = w.size();
	model.residual_variance = objective / static_cast<double>(w.size());
	model.iterations = iterations;
	model.objective_trace = std::move(trace);
	model.presample_level = presample;
	model.residuals = e;

	if (max_root_modulus(model.ar_lags(), -1.0) >= 1.0) {
		model.warnings.emplace_back("fitted AR polynomial is non-stationary (root on or inside the unit circle)");
	}
	if (max_root_modulus(model.ma_lags(), 1.0) >= 1.0) {
		model.warnings.emplace_back("fitted MA polynomial is non-invertible (root on or inside the unit circle)");
	}

	const std::size_t n_ar = model.ar_lags().size();
	const std::size_t n_ma = model.ma_lags().size();
	model.tail_y.assign(y.end() - static_cast<std::ptrdiff_t>(loss + 1), y.end());
	model.tail_w.assign(n_ar, presample);
	for (std::size_t k = 0; k < n_ar && k < w.size(); ++k) {
		model.tail_w[n_ar - 1 - k] = w[w.size() - 1 - k];
	}
	model.tail_e.assign(n_ma, 0.0);
	for (std::size_t k = 0; k < n_ma && k < e.size(); ++k) {
		model.tail_e[n_ma - 1 - k] = e[e.size() - 1 - k];
	}
	return model;
}

std::vector<double> forecast(const ArimaModel &model, std::size_t horizon, const Matrix *future_exog) {
	if (horizon < 1) {
		throw std::invalid_argument("forecast: horizon must be positive");
	}
	if (!model.exog_coeffs.empty()) {
		if (future_exog == nullptr) {
			throw ModelError("model has exogenous regressors; future values are required");
		}
		check_exog(future_exog, horizon, "forecast");
	}
	const auto phi = model.ar_lags();
	const auto theta = model.ma_lags();
	std::vector<double> w_tail = model.tail_w;
	std::vector<double> e_tail = model.tail_e;
	std::vector<double> future_w(horizon);
	for (std::size_t h = 0; h < horizon; ++h) {
		const double x = exog_term(model.exog_coeffs, future_exog, h);
		future_w[h] = predict_w(model, phi, theta, w_tail, e_tail, x);
		push_tail(w_tail, future_w[h]);
		push_tail(e_tail, 0.0);
	}
	return integrate(model.tail_y, future_w, model.order);
}

FilterResult filter(const ArimaModel &model, std::span<const double> y_new, const Matrix *exog_new) {
	if (!model.exog_coeffs.empty()) {
		if (exog_new == nullptr) {
			throw ModelError("model has exogenous regressors; values for the new observations are required");
		}
		check_exog(exog_new, y_new.size(), "filter");
	}
	FilterResult out{{}, model};
	ArimaModel &m = out.model;
	const auto phi = m.ar_lags();
	const auto theta = m.ma_lags();
	const ArimaOrder &o = m.order;
	out.one_step.reserve(y_new.size());
	for (std::size_t i = 0; i < y_new.size(); ++i) {
		const double x = exog_term(m.exog_coeffs, exog_new, i);
		const double w_hat = predict_w(m, phi, theta, m.tail_w, m.tail_e, x);
		const std::array<double, 1> w_hat_arr{w_hat};
		out.one_step.push_back(integrate(m.tail_y, w_hat_arr, o).front());

		push_tail(m.tail_y, y_new[i]);
		const double w_actual = difference(m.tail_y, o.d, o.D, o.s).values.back();
		push_tail(m.tail_w, w_actual);
		push_tail(m.tail_e, w_actual - w_hat);
	}
	return out;
}

Matrix default_calendar_exog(std::span<const Date> dates) {
	Matrix x(dates.size(), 6);
	for (std::size_t r = 0; r < dates.size(); ++r) {
		const unsigned iso = std::chrono::weekday{dates[r]}.iso_encoding();  // Monday = 1
		if (iso >= 2) {
			x(r, iso - 2) = 1.0;
		}
	}
	return x;
}

} // namespace chronocast::boxjenkins
