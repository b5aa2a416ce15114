#include "emanprint/nn.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

namespace emanprint::nn {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd &x, std::span<const Eigen::Index> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

std::vector<int> gather_labels(std::span<const int> y, std::span<const Eigen::Index> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (Eigen::Index r : rows)
    out.push_back(y[static_cast<std::size_t>(r)]);
  return out;
}

constexpr char kMagic[8] = {'E', 'M', 'P', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

class Writer {
public:
  explicit Writer(const std::filesystem::path &path) : out_(path, std::ios::binary), path_(path) {
    if (!out_)
      throw Error(ErrorKind::Io, "cannot write " + path.string());
  }
  template <typename T> void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char *>(&v), sizeof v);
  }
  void put_matrix(const Eigen::MatrixXd &m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        put<double>(m(r, c));
  }
  void finish() {
    out_.flush();
    if (!out_)
      throw Error(ErrorKind::Io, "write failed: " + path_.string());
  }

private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
public:
  explicit Reader(const std::filesystem::path &path) : path_(path) {
    if (!std::filesystem::exists(path))
      throw Error(ErrorKind::FileNotFound, "no such checkpoint: " + path.string());
    in_.open(path, std::ios::binary);
    if (!in_)
      throw Error(ErrorKind::Io, "cannot read " + path.string());
  }
  template <typename T> T get() {
    T v{};
    in_.read(reinterpret_cast<char *>(&v), sizeof v);
    if (!in_)
      throw Error(ErrorKind::MalformedHeader, "truncated checkpoint: " + path_.string());
    return v;
  }
  void get_matrix(Eigen::MatrixXd &m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        m(r, c) = get<double>();
  }
  void get_row(Eigen::RowVectorXd &v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v[i] = get<double>();
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
  [[noreturn]] void fail(const std::string &what) const {
    throw Error(ErrorKind::MalformedHeader, path_.string() + ": " + what);
  }

private:
  std::ifstream in_;
  std::filesystem::path path_;
};

} // namespace

std::int64_t MlpArchitecture::parameter_count() const {
  std::int64_t total = 0;
  std::int64_t fan_in = input_dim;
  for (const auto &h : hidden) {
    total += fan_in * h.units + h.units;
    fan_in = h.units;
  }
  return total + fan_in * output_dim + output_dim;
}

std::string MlpArchitecture::describe() const {
  std::string s = std::to_string(input_dim);
  for (const auto &h : hidden) {
    s += '-' + std::to_string(h.units) + (h.activation == Activation::ReLU ? "relu" : "linear");
    if (h.dropout_after > 0.0)
      s += "(dropout " + shortest(h.dropout_after) + ')';
  }
  return s + '-' + std::to_string(output_dim) + "softmax";
}

MlpArchitecture default_architecture(int classes) {
  MlpArchitecture arch;
  arch.output_dim = classes;
  return arch;
}

void validate(const MlpArchitecture &arch) {
  if (arch.input_dim < 1 || arch.output_dim < 1)
    throw Error(ErrorKind::InvalidArgument, "input and output sizes must be >= 1");
  for (const auto &h : arch.hidden) {
    if (h.units < 1)
      throw Error(ErrorKind::InvalidArgument, "hidden layer needs >= 1 unit");
    if (!(h.dropout_after >= 0.0 && h.dropout_after < 1.0))
      throw Error(ErrorKind::InvalidArgument, "dropout rate must be in [0, 1)");
  }
}

TrainConfig TrainConfig::baseline_preset() {
  TrainConfig c;
  c.batch_size = 32;
  c.epochs = 1000;
  return c;
}

TrainConfig TrainConfig::voip_preset() {
  TrainConfig c;
  c.batch_size = 256;
  c.epochs = 100;
  return c;
}

void validate(const TrainConfig &c) {
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate))
    throw Error(ErrorKind::InvalidArgument, "learning rate must be >= 0");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0))
    throw Error(ErrorKind::InvalidArgument, "Adam betas must be in [0, 1)");
  if (!(c.epsilon > 0.0))
    throw Error(ErrorKind::InvalidArgument, "Adam epsilon must be positive");
  if (c.batch_size < 1 || c.epochs < 0)
    throw Error(ErrorKind::InvalidArgument, "batch size must be >= 1 and epochs >= 0");
}

double sparse_cce_loss(const Eigen::MatrixXd &p, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != p.rows() || labels.empty())
    throw Error(ErrorKind::DimensionMismatch, "label count does not match probabilities");
  double total = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= p.cols())
      throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(y) + " out of range");
    total -= std::log(std::clamp(p(r, y), 1e-7, 1.0 - 1e-7));
  }
  return total / static_cast<double>(p.rows());
}

std::vector<int> predict_labels(const Eigen::MatrixXd &p) {
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    Eigen::Index best = 0;
    p.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd &x) {
  if (x.rows() == 0)
    throw Error(ErrorKind::InvalidArgument, "cannot standardize an empty split");
  Standardizer s;
  s.mean = x.colwise().mean();
  const Eigen::MatrixXd centred = x.rowwise() - s.mean;
  s.scale = (centred.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i)
    if (!(s.scale[i] > 0.0))
      s.scale[i] = 1.0;
  return s;
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd &x) const {
  if (x.cols() != mean.size())
    throw Error(ErrorKind::DimensionMismatch, "feature width does not match the standardizer");
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

void write_history(const History &h, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "epoch,train_loss,val_accuracy\n";
  char buf[64];
  for (std::size_t e = 0; e < h.train_loss.size(); ++e) {
    out << e + 1 << ',';
    std::snprintf(buf, sizeof buf, "%.17g", h.train_loss[e]);
    out << buf << ',';
    const double acc = e < h.val_accuracy.size() ? h.val_accuracy[e]
                                                 : std::numeric_limits<double>::quiet_NaN();
    std::snprintf(buf, sizeof buf, "%.17g", acc);
    out << buf << '\n';
  }
  if (!out)
    throw Error(ErrorKind::Io, "write failed: " + path.string());
}

Eigen::MatrixXd Classifier::predict_proba(const Eigen::MatrixXd &x) {
  return model.forward(standardizer.transform(x), false);
}

std::vector<int> Classifier::predict(const Eigen::MatrixXd &x) {
  return predict_labels(predict_proba(x));
}

TrainResult train(const MlpArchitecture &arch, const Eigen::MatrixXd &x_train,
                  std::span<const int> y_train, const Eigen::MatrixXd &x_val,
                  std::span<const int> y_val, const TrainConfig &config) {
  validate(arch);
  validate(config);
  if (x_train.rows() == 0)
    throw Error(ErrorKind::InvalidArgument, "empty training split");
  if (x_train.rows() != static_cast<Eigen::Index>(y_train.size()) ||
      x_val.rows() != static_cast<Eigen::Index>(y_val.size()))
    throw Error(ErrorKind::DimensionMismatch, "feature rows and labels differ in count");
  if (x_val.rows() > 0 && x_val.cols() != x_train.cols())
    throw Error(ErrorKind::DimensionMismatch, "validation width differs from training");

  TrainResult result;
  Classifier &clf = result.classifier;
  clf.seed = config.seed;
  clf.standardizer = Standardizer::fit(x_train);
  clf.model = MlpModel(arch, derive_seed(config.seed, 0));
  const Eigen::MatrixXd xs = clf.standardizer.transform(x_train);
  const Eigen::MatrixXd xv = x_val.rows() > 0 ? clf.standardizer.transform(x_val) : x_val;

  Rng rng(derive_seed(config.seed, 1));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(xs.rows()));
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle)
      shuffle(std::span<Eigen::Index>(order), rng);
    double loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const auto rows = std::span<const Eigen::Index>(order).subspan(
          start, std::min(batch, order.size() - start));
      const auto labels = gather_labels(y_train, rows);
      const Eigen::MatrixXd p = clf.model.forward(gather_rows(xs, rows), true, &rng);
      loss += sparse_cce_loss(p, labels) * static_cast<double>(rows.size());
      clf.model.adam_step(clf.model.backward(labels), config);
    }
    result.history.train_loss.push_back(loss / static_cast<double>(order.size()));
    if (xv.rows() > 0) {
      const auto pred = predict_labels(clf.model.forward(xv, false));
      std::size_t hits = 0;
      for (std::size_t i = 0; i < pred.size(); ++i)
        hits += pred[i] == y_val[i];
      result.history.val_accuracy.push_back(static_cast<double>(hits) /
                                            static_cast<double>(pred.size()));
    } else {
      result.history.val_accuracy.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return result;
}

Metrics Metrics::from_confusion(const Eigen::MatrixXi &confusion) {
  if (confusion.rows() != confusion.cols() || confusion.rows() == 0)
    throw Error(ErrorKind::DimensionMismatch, "confusion matrix must be square and non-empty");
  Metrics m;
  m.confusion = confusion;
  const Eigen::Index k = confusion.rows();
  m.precision = Eigen::VectorXd::Zero(k);
  m.recall = Eigen::VectorXd::Zero(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const int col = confusion.col(c).sum();
    const int row = confusion.row(c).sum();
    if (col > 0)
      m.precision[c] = static_cast<double>(confusion(c, c)) / col;
    if (row > 0)
      m.recall[c] = static_cast<double>(confusion(c, c)) / row;
  }
  const int total = confusion.sum();
  m.accuracy = total > 0 ? static_cast<double>(confusion.trace()) / total : 0.0;
  return m;
}

Metrics evaluate_metrics(std::span<const int> truth, std::span<const int> predicted,
                         int classes) {
  if (truth.size() != predicted.size())
    throw Error(ErrorKind::DimensionMismatch, "truth and prediction counts differ");
  if (classes < 1)
    throw Error(ErrorKind::InvalidArgument, "need at least one class");
  Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(classes, classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= classes || predicted[i] < 0 || predicted[i] >= classes)
      throw Error(ErrorKind::LabelOutOfRange, "label out of range");
    ++confusion(truth[i], predicted[i]);
  }
  return Metrics::from_confusion(confusion);
}

Metrics evaluate_metrics(Classifier &classifier, const Eigen::MatrixXd &x,
                         std::span<const int> y) {
  const auto pred = classifier.predict(x);
  return evaluate_metrics(y, pred, classifier.model.architecture().output_dim);
}

int demuth_bound(std::int64_t train_samples, int input_dim, int output_dim, double alpha) {
  if (train_samples <= 0 || input_dim <= 0 || output_dim <= 0 || !(alpha > 0.0))
    throw Error(ErrorKind::InvalidArgument, "Demuth bound needs positive inputs");
  return static_cast<int>(std::floor(static_cast<double>(train_samples) /
                                     (alpha * static_cast<double>(input_dim + output_dim))));
}

std::vector<MlpArchitecture> default_search_space(int input_dim, int classes, int bound) {
  std::vector<int> units;
  for (int u = 50; u <= bound; u += 50)
    units.push_back(u);
  if (units.empty())
    units.push_back(std::max(1, bound));
  std::vector<MlpArchitecture> space;
  for (int layers = 1; layers <= 3; ++layers)
    for (int u : units)
      for (double dropout : {0.0, 0.05, 0.1}) {
        MlpArchitecture arch;
        arch.input_dim = input_dim;
        arch.output_dim = classes;
        arch.hidden.assign(static_cast<std::size_t>(layers), {u, Activation::ReLU, dropout});
        space.push_back(std::move(arch));
      }
  return space;
}

std::vector<std::vector<Eigen::Index>> stratified_folds(std::span<const int> labels, int classes,
                                                        int folds, std::uint64_t seed) {
  if (folds < 2)
    throw Error(ErrorKind::InvalidArgument, "need at least 2 folds");
  std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes)
      throw Error(ErrorKind::LabelOutOfRange, "label out of range");
    by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<Eigen::Index>(i));
  }
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(folds));
  std::size_t next = 0;
  for (int c = 0; c < classes; ++c) {
    auto &members = by_class[static_cast<std::size_t>(c)];
    if (static_cast<int>(members.size()) < folds)
      throw Error(ErrorKind::InvalidArgument,
                  "class " + std::to_string(c) + " has fewer samples than folds");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    shuffle(std::span<Eigen::Index>(members), rng);
    for (Eigen::Index i : members)
      out[next++ % out.size()].push_back(i);
  }
  for (auto &f : out)
    std::sort(f.begin(), f.end());
  return out;
}

std::size_t select_best(std::span<const GridCell> cells) {
  if (cells.empty())
    throw Error(ErrorKind::InvalidArgument, "empty search space");
  std::size_t best = 0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const double a = cells[i].mean_accuracy, b = cells[best].mean_accuracy;
    if (a > b + 1e-12 ||
        (std::abs(a - b) <= 1e-12 && cells[i].architecture.parameter_count() <
                                         cells[best].architecture.parameter_count()))
      best = i;
  }
  return best;
}

GridResult grid_search(const Eigen::MatrixXd &x, std::span<const int> y, int classes,
                       std::span<const MlpArchitecture> space, const TrainConfig &config,
                       int folds) {
  if (space.empty())
    throw Error(ErrorKind::InvalidArgument, "empty search space");
  if (x.rows() != static_cast<Eigen::Index>(y.size()))
    throw Error(ErrorKind::DimensionMismatch, "feature rows and labels differ in count");
  const auto parts = stratified_folds(y, classes, folds, config.seed);

  GridResult result;
  for (const auto &arch : space) {
    GridCell cell{arch, {}, 0.0};
    for (int f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> train_rows;
      for (int g = 0; g < folds; ++g)
        if (g != f)
          train_rows.insert(train_rows.end(), parts[static_cast<std::size_t>(g)].begin(),
                            parts[static_cast<std::size_t>(g)].end());
      std::sort(train_rows.begin(), train_rows.end());
      const auto &val_rows = parts[static_cast<std::size_t>(f)];
      TrainConfig cfg = config;
      cfg.seed = derive_seed(config.seed, 100 + static_cast<std::uint64_t>(f));
      const auto y_train = gather_labels(y, train_rows);
      auto trained = train(arch, gather_rows(x, train_rows), y_train, Eigen::MatrixXd(0, x.cols()),
                           {}, cfg);
      const auto y_val = gather_labels(y, val_rows);
      cell.fold_accuracy.push_back(
          evaluate_metrics(trained.classifier, gather_rows(x, val_rows), y_val).accuracy);
    }
    cell.mean_accuracy = std::accumulate(cell.fold_accuracy.begin(), cell.fold_accuracy.end(), 0.0) /
                         static_cast<double>(folds);
    result.cells.push_back(std::move(cell));
  }
  result.best = select_best(result.cells);
  return result;
}

void save_checkpoint(const Classifier &clf, const std::filesystem::path &path) {
  const auto &arch = clf.model.architecture();
  const auto &layers = clf.model.layers();
  if (layers.empty())
    throw Error(ErrorKind::InvalidArgument, "cannot save an untrained model");
  Writer w(path);
  for (char c : kMagic)
    w.put(c);
  w.put(kCheckpointVersion);
  w.put(clf.seed);
  w.put(clf.split_seed);
  w.put<std::int32_t>(arch.input_dim);
  w.put<std::int32_t>(arch.output_dim);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(arch.hidden.size()));
  for (const auto &h : arch.hidden) {
    w.put<std::int32_t>(h.units);
    w.put<std::int32_t>(static_cast<std::int32_t>(h.activation));
    w.put(h.dropout_after);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(clf.standardizer.mean.size()));
  w.put_matrix(clf.standardizer.mean);
  w.put_matrix(clf.standardizer.scale);
  for (const auto &l : layers) {
    w.put_matrix(l.weights);
    w.put_matrix(l.bias);
  }
  const auto &adam = clf.model.adam();
  w.put<std::int64_t>(adam.step);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    w.put_matrix(adam.m_weights[i]);
    w.put_matrix(adam.v_weights[i]);
    w.put_matrix(adam.m_bias[i]);
    w.put_matrix(adam.v_bias[i]);
  }
  w.finish();
}

Classifier load_checkpoint(const std::filesystem::path &path) {
  Reader r(path);
  char magic[8];
  for (char &c : magic)
    c = r.get<char>();
  if (std::memcmp(magic, kMagic, sizeof magic) != 0)
    r.fail("not a model checkpoint");
  if (r.get<std::uint32_t>() != kCheckpointVersion)
    r.fail("unsupported checkpoint version");

  Classifier clf;
  clf.seed = r.get<std::uint64_t>();
  clf.split_seed = r.get<std::uint64_t>();
  MlpArchitecture arch;
  arch.input_dim = r.get<std::int32_t>();
  arch.output_dim = r.get<std::int32_t>();
  const auto hidden = r.get<std::uint32_t>();
  if (hidden > 1024)
    r.fail("implausible layer count");
  arch.hidden.clear();
  for (std::uint32_t i = 0; i < hidden; ++i) {
    LayerSpec h;
    h.units = r.get<std::int32_t>();
    const auto act = r.get<std::int32_t>();
    if (act != 0 && act != 1)
      r.fail("unknown activation");
    h.activation = static_cast<Activation>(act);
    h.dropout_after = r.get<double>();
    arch.hidden.push_back(h);
  }
  try {
    validate(arch);
  } catch (const Error &e) {
    r.fail(e.what());
  }
  const auto dim = r.get<std::uint32_t>();
  if (static_cast<int>(dim) != arch.input_dim)
    r.fail("standardizer width does not match the input layer");
  clf.standardizer.mean.resize(dim);
  clf.standardizer.scale.resize(dim);
  r.get_row(clf.standardizer.mean);
  r.get_row(clf.standardizer.scale);

  clf.model = MlpModel(arch, 0);
  auto &layers = clf.model.layers();
  for (auto &l : layers) {
    r.get_matrix(l.weights);
    r.get_row(l.bias);
  }
  auto &adam = clf.model.adam();
  adam.step = r.get<std::int64_t>();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    r.get_matrix(adam.m_weights[i]);
    r.get_matrix(adam.v_weights[i]);
    r.get_row(adam.m_bias[i]);
    r.get_row(adam.v_bias[i]);
  }
  if (!r.at_end())
    r.fail("trailing bytes");
  return clf;
}

} // namespace emanprint::nn
