#include "ervc/plots.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>

namespace ervc {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Panel {
  double x0, y0, w, h;
  double xmax, ymax;
  double px(double x) const { return x0 + w * (xmax > 1 ? (x - 1) / (xmax - 1) : 0.5); }
  double py(double y) const { return y0 + h * (1.0 - y / ymax); }
};

std::string axes(const Panel& p, const std::string& title, const std::string& ylabel) {
  std::string s;
  s += "<rect x='" + num(p.x0) + "' y='" + num(p.y0) + "' width='" + num(p.w) + "' height='" +
       num(p.h) + "' fill='none' stroke='#444'/>\n";
  s += "<text x='" + num(p.x0 + p.w / 2) + "' y='" + num(p.y0 - 10) +
       "' text-anchor='middle' font-size='14'>" + title + "</text>\n";
  s += "<text x='" + num(p.x0 + p.w / 2) + "' y='" + num(p.y0 + p.h + 34) +
       "' text-anchor='middle' font-size='12'>epoch</text>\n";
  s += "<text x='" + num(p.x0 - 42) + "' y='" + num(p.y0 + p.h / 2) + "' font-size='12' transform='rotate(-90 " +
       num(p.x0 - 42) + " " + num(p.y0 + p.h / 2) + ")' text-anchor='middle'>" + ylabel + "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = p.ymax * i / 4.0;
    s += "<text x='" + num(p.x0 - 6) + "' y='" + num(p.py(v) + 4) + "' text-anchor='end' font-size='10'>" +
         num(v) + "</text>\n";
  }
  s += "<text x='" + num(p.x0) + "' y='" + num(p.y0 + p.h + 16) + "' font-size='10'>1</text>\n";
  s += "<text x='" + num(p.x0 + p.w) + "' y='" + num(p.y0 + p.h + 16) + "' text-anchor='end' font-size='10'>" +
       std::to_string(static_cast<int>(p.xmax)) + "</text>\n";
  return s;
}

std::string polyline(const Panel& p, const TrainingHistory& h, const std::function<double(const EpochRecord&)>& f,
                     const std::string& color) {
  std::string pts;
  for (const auto& r : h.epochs) pts += num(p.px(static_cast<double>(r.epoch))) + "," + num(p.py(f(r))) + " ";
  return "<polyline fill='none' stroke='" + color + "' stroke-width='2' points='" + pts + "'/>\n";
}

}  // namespace

std::string training_curves_svg(const TrainingHistory& history) {
  const double epochs = history.epochs.empty() ? 1.0 : static_cast<double>(history.epochs.back().epoch);
  double max_loss = 0.0;
  for (const auto& r : history.epochs) max_loss = std::max(max_loss, r.train_loss);
  if (max_loss <= 0) max_loss = 1.0;
  const Panel loss{70, 40, 360, 260, epochs, max_loss * 1.05};
  const Panel acc{530, 40, 360, 260, epochs, 1.0};
  std::string s = "<svg xmlns='http://www.w3.org/2000/svg' width='940' height='360' font-family='sans-serif'>\n";
  s += "<rect width='100%' height='100%' fill='white'/>\n";
  s += axes(loss, "training loss", "cross entropy");
  s += polyline(loss, history, [](const EpochRecord& r) { return r.train_loss; }, "#c0392b");
  s += axes(acc, "top-1 accuracy", "accuracy");
  s += polyline(acc, history, [](const EpochRecord& r) { return r.train_acc; }, "#2471a3");
  s += polyline(acc, history, [](const EpochRecord& r) { return r.val_acc; }, "#229954");
  s += "<text x='540' y='60' font-size='11' fill='#2471a3'>train</text>\n";
  s += "<text x='540' y='75' font-size='11' fill='#229954'>validation</text>\n";
  s += "</svg>\n";
  return s;
}

std::string confusion_svg(const ConfusionMatrix& cm) {
  constexpr int kCell = 12, kMargin = 190;
  const int side = kMargin + kCell * static_cast<int>(cm.n) + 20;
  std::string s = "<svg xmlns='http://www.w3.org/2000/svg' width='" + std::to_string(side) + "' height='" +
                  std::to_string(side) + "' font-family='sans-serif'>\n<rect width='100%' height='100%' fill='white'/>\n";
  for (std::size_t t = 0; t < cm.n; ++t) {
    const std::string name = render(label_at(t));
    const int pos = kMargin + kCell * static_cast<int>(t);
    s += "<text x='" + std::to_string(kMargin - 4) + "' y='" + std::to_string(pos + kCell - 3) +
         "' text-anchor='end' font-size='8'>" + name + "</text>\n";
    s += "<text x='" + std::to_string(pos + kCell - 3) + "' y='" + std::to_string(kMargin - 4) +
         "' font-size='8' transform='rotate(-90 " + std::to_string(pos + kCell - 3) + " " +
         std::to_string(kMargin - 4) + ")'>" + name + "</text>\n";
    const double row = static_cast<double>(cm.row_total(t));
    for (std::size_t p = 0; p < cm.n; ++p) {
      const double v = row > 0 ? static_cast<double>(cm.at(t, p)) / row : 0.0;
      if (v == 0.0) continue;
      const int shade = static_cast<int>(255.0 * (1.0 - v));
      s += "<rect x='" + std::to_string(kMargin + kCell * static_cast<int>(p)) + "' y='" + std::to_string(pos) +
           "' width='" + std::to_string(kCell) + "' height='" + std::to_string(kCell) + "' fill='rgb(" +
           std::to_string(shade) + "," + std::to_string(shade) + ",255)'/>\n";
    }
  }
  s += "<rect x='" + std::to_string(kMargin) + "' y='" + std::to_string(kMargin) + "' width='" +
       std::to_string(kCell * static_cast<int>(cm.n)) + "' height='" + std::to_string(kCell * static_cast<int>(cm.n)) +
       "' fill='none' stroke='#444'/>\n</svg>\n";
  return s;
}

}  // namespace ervc
