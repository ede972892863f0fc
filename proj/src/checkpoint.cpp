#include "chronocast/checkpoint.hpp"

#include "chronocast/error.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace chronocast {

namespace {

constexpr const char *kMagic = "chronocast-checkpoint";
constexpr std::array<const char *, 4> kGateNames{"f", "i", "c", "o"};

std::string num(double v) {
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

void put_values(std::ostream &out, const char *key, std::span<const double> values) {
	out << key << ' ' << values.size();
	for (double v : values) {
		out << ' ' << num(v);
	}
	out << '\n';
}

template <class... Ts>
struct overloaded : Ts... {
	using Ts::operator()...;
};

// Reads "key v1 v2 ..." lines and checks keys as they come.
class Reader {
public:
	explicit Reader(std::istream &in) : in_(in) {}

	std::vector<std::string> line(std::string_view key) {
		std::string text;
		do {
			if (!std::getline(in_, text)) {
				fail("unexpected end of file, expected '" + std::string(key) + "'");
			}
			++line_no_;
			if (!text.empty() && text.back() == '\r') {
				text.pop_back();
			}
		} while (text.empty());
		std::istringstream ss(text);
		std::vector<std::string> tokens;
		for (std::string t; ss >> t;) {
			tokens.push_back(std::move(t));
		}
		if (tokens.front() != key) {
			fail("expected '" + std::string(key) + "', found '" + tokens.front() + "'");
		}
		tokens.erase(tokens.begin());
		return tokens;
	}

	std::string word(std::string_view key) {
		auto t = line(key);
		if (t.size() != 1) {
			fail("'" + std::string(key) + "' takes one value");
		}
		return t[0];
	}

	double real(const std::string &token) {
		char *end = nullptr;
		const double v = std::strtod(token.c_str(), &end);
		if (end != token.c_str() + token.size()) {
			fail("not a number: '" + token + "'");
		}
		return v;
	}

	std::uint64_t integer(const std::string &token) {
		std::uint64_t v = 0;
		const auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
		if (ec != std::errc{} || p != token.data() + token.size()) {
			fail("not a non-negative integer: '" + token + "'");
		}
		return v;
	}

	double real_field(std::string_view key) { return real(word(key)); }
	std::uint64_t int_field(std::string_view key) { return integer(word(key)); }

	std::vector<double> values(std::string_view key) {
		const auto t = line(key);
		if (t.empty()) {
			fail("'" + std::string(key) + "' is missing its count");
		}
		const std::size_t n = integer(t[0]);
		if (t.size() != n + 1) {
			fail("'" + std::string(key) + "' declares " + t[0] + " values but has " + std::to_string(t.size() - 1));
		}
		std::vector<double> out;
		out.reserve(n);
		for (std::size_t k = 1; k < t.size(); ++k) {
			out.push_back(real(t[k]));
		}
		return out;
	}

	[[noreturn]] void fail(const std::string &what) const {
		throw DataError("checkpoint line " + std::to_string(line_no_) + ": " + what);
	}

private:
	std::istream &in_;
	std::size_t line_no_ = 0;
};

void write_arima(std::ostream &out, const boxjenkins::ArimaModel &m) {
	const auto &o = m.order;
	out << "order " << o.p << ' ' << o.d << ' ' << o.q << ' ' << o.P << ' ' << o.D << ' ' << o.Q << ' ' << o.s << '\n';
	put_values(out, "ar", m.ar);
	put_values(out, "ma", m.ma);
	put_values(out, "seasonal_ar", m.seasonal_ar);
	put_values(out, "seasonal_ma", m.seasonal_ma);
	put_values(out, "exog_coeffs", m.exog_coeffs);
	out << "intercept " << (m.has_intercept ? 1 : 0) << ' ' << num(m.intercept) << '\n';
	out << "residual_variance " << num(m.residual_variance) << '\n';
	out << "css " << num(m.css) << '\n';
	out << "presample_level " << num(m.presample_level) << '\n';
	put_values(out, "tail_y", m.tail_y);
	put_values(out, "tail_w", m.tail_w);
	put_values(out, "tail_e", m.tail_e);
}

boxjenkins::ArimaModel read_arima(Reader &r) {
	boxjenkins::ArimaModel m;
	const auto o = r.line("order");
	if (o.size() != 7) {
		r.fail("order needs p d q P D Q s");
	}
	int *fields[] = {&m.order.p, &m.order.d, &m.order.q, &m.order.P, &m.order.D, &m.order.Q, &m.order.s};
	for (std::size_t k = 0; k < 7; ++k) {
		*fields[k] = static_cast<int>(r.integer(o[k]));
	}
	m.order.validate();
	m.ar = r.values("ar");
	m.ma = r.values("ma");
	m.seasonal_ar = r.values("seasonal_ar");
	m.seasonal_ma = r.values("seasonal_ma");
	m.exog_coeffs = r.values("exog_coeffs");
	const auto ic = r.line("intercept");
	if (ic.size() != 2) {
		r.fail("intercept needs a flag and a value");
	}
	m.has_intercept = r.integer(ic[0]) != 0;
	m.intercept = r.real(ic[1]);
	m.residual_variance = r.real_field("residual_variance");
	m.css = r.real_field("css");
	m.presample_level = r.real_field("presample_level");
	m.tail_y = r.values("tail_y");
	m.tail_w = r.values("tail_w");
	m.tail_e = r.values("tail_e");
	if (m.ar.size() != static_cast<std::size_t>(m.order.p) || m.ma.size() != static_cast<std::size_t>(m.order.q) ||
	    m.seasonal_ar.size() != static_cast<std::size_t>(m.order.P) ||
	    m.seasonal_ma.size() != static_cast<std::size_t>(m.order.Q)) {
		r.fail("coefficient counts do not match the order");
	}
	if (m.tail_y.size() != m.order.differencing_loss() + 1 || m.tail_w.size() != m.ar_lags().size() ||
	    m.tail_e.size() != m.ma_lags().size()) {
		r.fail("forecast state does not match the order");
	}
	return m;
}

void write_dense(std::ostream &out, const neural::DenseNet &net) {
	out << "layers " << net.layers().size() << '\n';
	for (const auto &l : net.layers()) {
		out << "layer " << l.fan_in << ' ' << l.fan_out << ' ' << neural::to_string(l.activation) << '\n';
	}
	put_values(out, "params", net.parameters());
}

neural::DenseNet read_dense(Reader &r, std::uint64_t seed) {
	const std::size_t n = r.int_field("layers");
	std::vector<neural::LayerSpec> specs;
	for (std::size_t k = 0; k < n; ++k) {
		const auto t = r.line("layer");
		if (t.size() != 3) {
			r.fail("layer needs fan_in fan_out activation");
		}
		const auto act = neural::parse_activation(t[2]);
		if (!act) {
			r.fail("unknown activation '" + t[2] + "'");
		}
		specs.push_back({r.integer(t[0]), r.integer(t[1]), *act});
	}
	neural::DenseNet net(std::move(specs), seed);
	const auto p = r.values("params");
	if (p.size() != net.parameter_count()) {
		r.fail("expected " + std::to_string(net.parameter_count()) + " parameters");
	}
	std::copy(p.begin(), p.end(), net.parameters().begin());
	return net;
}

void write_lstm(std::ostream &out, const lstm::LstmNet &net) {
	const auto &cfg = net.config();
	out << "input_size " << cfg.input_size << '\n';
	out << "hidden " << cfg.hidden_sizes.size();
	for (std::size_t h : cfg.hidden_sizes) {
		out << ' ' << h;
	}
	out << '\n' << "relu_on_hidden " << (cfg.relu_on_hidden ? 1 : 0) << '\n';
	for (std::size_t l = 0; l < net.layer_count(); ++l) {
		const auto view = net.layer(l);
		const std::size_t H = view.hidden_size;
		const std::size_t K = view.concat_size();
		for (std::size_t g = 0; g < 4; ++g) {
			out << "gate " << l << ' ' << kGateNames[g] << '\n';
			put_values(out, "W", view.weights.subspan(g * H * K, H * K));
			put_values(out, "b", view.biases.subspan(g * H, H));
		}
	}
	const auto all = net.parameters();
	const std::size_t top = cfg.hidden_sizes.back();
	put_values(out, "head", all.subspan(all.size() - top - 1));
}

lstm::LstmNet read_lstm(Reader &r, std::uint64_t seed) {
	lstm::LstmConfig cfg;
	cfg.input_size = r.int_field("input_size");
	const auto h = r.line("hidden");
	if (h.empty() || h.size() != r.integer(h[0]) + 1) {
		r.fail("hidden needs a count followed by the sizes");
	}
	cfg.hidden_sizes.clear();
	for (std::size_t k = 1; k < h.size(); ++k) {
		cfg.hidden_sizes.push_back(r.integer(h[k]));
	}
	cfg.relu_on_hidden = r.int_field("relu_on_hidden") != 0;
	lstm::LstmNet net(cfg, seed);
	std::vector<double> flat;
	flat.reserve(net.parameter_count());
	for (std::size_t l = 0; l < net.layer_count(); ++l) {
		const auto view = net.layer(l);
		std::vector<double> w, b;
		for (std::size_t g = 0; g < 4; ++g) {
			const auto t = r.line("gate");
			if (t.size() != 2 || r.integer(t[0]) != l || t[1] != kGateNames[g]) {
				r.fail("gate blocks must follow (f, i, c, o) order per layer");
			}
			const auto wg = r.values("W");
			const auto bg = r.values("b");
			if (wg.size() != view.hidden_size * view.concat_size() || bg.size() != view.hidden_size) {
				r.fail("gate block has the wrong size");
			}
			w.insert(w.end(), wg.begin(), wg.end());
			b.insert(b.end(), bg.begin(), bg.end());
		}
		flat.insert(flat.end(), w.begin(), w.end());
		flat.insert(flat.end(), b.begin(), b.end());
	}
	const auto head = r.values("head");
	if (head.size() != cfg.hidden_sizes.back() + 1) {
		r.fail("head has the wrong size");
	}
	flat.insert(flat.end(), head.begin(), head.end());
	std::copy(flat.begin(), flat.end(), net.parameters().begin());
	return net;
}

void write_tree(std::ostream &out, const forest::RegressionTree &tree, std::size_t node) {
	const auto &n = tree.nodes[node];
	if (n.leaf) {
		out << "L " << num(n.value) << '\n';
		return;
	}
	out << "S " << n.feature << ' ' << num(n.threshold) << ' ' << num(n.value) << '\n';
	write_tree(out, tree, n.left);
	write_tree(out, tree, n.right);
}

std::size_t read_tree(Reader &r, std::istream &in, forest::RegressionTree &tree, std::size_t depth) {
	std::string tag;
	if (!(in >> tag)) {
		r.fail("truncated tree");
	}
	const std::size_t id = tree.nodes.size();
	tree.nodes.emplace_back();
	tree.depth = std::max(tree.depth, depth);
	std::string a, b, c;
	if (tag == "L") {
		in >> a;
		tree.nodes[id].value = r.real(a);
		return id;
	}
	if (tag != "S") {
		r.fail("unknown tree node tag '" + tag + "'");
	}
	in >> a >> b >> c;
	const std::size_t f = r.integer(a);
	const double thr = r.real(b);
	const double v = r.real(c);
	const std::size_t left = read_tree(r, in, tree, depth + 1);
	const std::size_t right = read_tree(r, in, tree, depth + 1);
	tree.nodes[id] = {false, f, thr, left, right, v};
	return id;
}

void write_forest(std::ostream &out, const forest::ForestModel &m) {
	out << "n_features " << m.n_features << '\n';
	out << "n_estimators " << m.trees.size() << '\n';
	out << "max_depth " << (m.config.tree.max_depth ? std::to_string(*m.config.tree.max_depth) : "none") << '\n';
	out << "m_try " << m.config.tree.m_try << '\n';
	out << "min_leaf " << m.config.tree.min_leaf << '\n';
	out << "random_state " << m.config.random_state << '\n';
	out << "target_range " << num(m.target_min) << ' ' << num(m.target_max) << '\n';
	for (std::size_t k = 0; k < m.trees.size(); ++k) {
		out << "tree " << k << ' ' << m.trees[k].nodes.size() << '\n';
		write_tree(out, m.trees[k], 0);
	}
}

forest::ForestModel read_forest(Reader &r, std::istream &in) {
	forest::ForestModel m;
	m.n_features = r.int_field("n_features");
	const std::size_t n = r.int_field("n_estimators");
	const std::string depth = r.word("max_depth");
	m.config.n_estimators = n;
	m.config.tree.max_depth = depth == "none" ? std::nullopt : std::optional<std::size_t>(r.integer(depth));
	m.config.tree.m_try = r.int_field("m_try");
	m.config.tree.min_leaf = r.int_field("min_leaf");
	m.config.random_state = r.int_field("random_state");
	const auto range = r.line("target_range");
	if (range.size() != 2) {
		r.fail("target_range needs two values");
	}
	m.target_min = r.real(range[0]);
	m.target_max = r.real(range[1]);
	for (std::size_t k = 0; k < n; ++k) {
		const auto t = r.line("tree");
		if (t.size() != 2 || r.integer(t[0]) != k) {
			r.fail("trees out of order");
		}
		forest::RegressionTree tree;
		read_tree(r, in, tree, 0);
		if (tree.nodes.size() != r.integer(t[1])) {
			r.fail("tree " + t[0] + " node count mismatch");
		}
		m.trees.push_back(std::move(tree));
	}
	return m;
}

} // namespace

void write_checkpoint(std::ostream &out, const TrainedModel &tm) {
	const ModelContext &ctx = tm.context;
	out << kMagic << ' ' << kCheckpointVersion << '\n';
	out << "model " << to_string(tm.kind) << '\n';
	out << "seed " << tm.seed << '\n';
	out << "epoch " << tm.epoch << '\n';
	out << "validation_mse " << num(tm.validation_mse) << '\n';
	out << "normalizer " << num(ctx.normalizer.train_min()) << ' ' << num(ctx.normalizer.train_max()) << '\n';
	out << "window " << ctx.window << '\n';
	out << "last_date " << format_iso(ctx.last_date) << '\n';
	put_values(out, "last_window", ctx.last_window);
	out << "calendar_exog " << (tm.calendar_exog ? 1 : 0) << '\n';
	out << "steps_since_fit " << tm.steps_since_fit << '\n';
	std::visit(overloaded{
	               [&](const grey::GreyModel &m) {
		               out << "gm11 " << num(m.a) << ' ' << num(m.b) << ' ' << num(m.x1) << ' ' << m.n_fit << '\n';
	               },
	               [&](const boxjenkins::ArimaModel &m) { write_arima(out, m); },
	               [&](const neural::DenseNet &m) { write_dense(out, m); },
	               [&](const lstm::LstmNet &m) { write_lstm(out, m); },
	               [&](const forest::ForestModel &m) { write_forest(out, m); },
	           },
	           tm.model);
	out << "end\n";
}

TrainedModel read_checkpoint(std::istream &in) {
	Reader r(in);
	const auto head = r.line(kMagic);
	if (head.size() != 1 || r.integer(head[0]) != static_cast<std::uint64_t>(kCheckpointVersion)) {
		r.fail("unsupported checkpoint version");
	}
	TrainedModel tm;
	const std::string tag = r.word("model");
	const auto kind = parse_model_kind(tag);
	if (!kind) {
		r.fail("unknown model tag '" + tag + "'");
	}
	tm.kind = *kind;
	tm.seed = r.int_field("seed");
	tm.epoch = static_cast<int>(r.int_field("epoch"));
	tm.validation_mse = r.real_field("validation_mse");
	const auto norm = r.line("normalizer");
	if (norm.size() != 2) {
		r.fail("normalizer needs min and max");
	}
	tm.context.normalizer = Normalizer(r.real(norm[0]), r.real(norm[1]));
	tm.context.window = r.int_field("window");
	const std::string date = r.word("last_date");
	const auto parsed = parse_iso_date(date);
	if (!parsed) {
		r.fail("bad last_date '" + date + "'");
	}
	tm.context.last_date = *parsed;
	tm.context.last_window = r.values("last_window");
	tm.calendar_exog = r.int_field("calendar_exog") != 0;
	tm.steps_since_fit = r.int_field("steps_since_fit");
	switch (tm.kind) {
	case ModelKind::Gm11: {
		const auto t = r.line("gm11");
		if (t.size() != 4) {
			r.fail("gm11 needs a b x1 n_fit");
		}
		tm.model = grey::GreyModel{r.real(t[0]), r.real(t[1]), r.real(t[2]), r.integer(t[3])};
		break;
	}
	case ModelKind::Arima:
	case ModelKind::Sarimax:
		tm.model = read_arima(r);
		break;
	case ModelKind::Ann:
		tm.model = read_dense(r, tm.seed);
		break;
	case ModelKind::Lstm:
		tm.model = read_lstm(r, tm.seed);
		break;
	case ModelKind::Rf:
		tm.model = read_forest(r, in);
		break;
	}
	r.line("end");
	return tm;
}

void save_checkpoint(const std::filesystem::path &path, const TrainedModel &model) {
	std::ofstream out(path);
	if (!out) {
		throw DataError("cannot write checkpoint " + path.string());
	}
	write_checkpoint(out, model);
	if (!out) {
		throw DataError("failed writing checkpoint " + path.string());
	}
}

TrainedModel load_checkpoint(const std::filesystem::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw DataError("cannot open checkpoint " + path.string());
	}
	return read_checkpoint(in);
}

} // namespace chronocast
