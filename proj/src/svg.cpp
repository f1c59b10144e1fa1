#include "ksdyn/svg.hpp"

#include <algorithm>
#include <cstdarg>
#include <cstdio>
#include <utility>
#include <vector>

namespace ksdyn {

namespace {

constexpr int kWidth = 460;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 56;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 48;

double x_px(double x) {
    return kMarginLeft + x * (kWidth - kMarginLeft - kMarginRight);
}

double y_px(double y) {
    return kHeight - kMarginBottom -
           y * (kHeight - kMarginTop - kMarginBottom);
}

std::string escape_xml(const std::string& raw) {
    std::string out;
    for (char c : raw) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void append_fmt(std::string& out, const char* fmt, ...)
    __attribute__((format(printf, 2, 3)));

void append_fmt(std::string& out, const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    out += buf;
}

void append_frame(std::string& out, const std::string& title,
                  const std::string& x_label, const std::string& y_label) {
    append_fmt(out,
               "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
               "fill=\"none\" stroke=\"#444\"/>\n",
               kMarginLeft, kMarginTop, kWidth - kMarginLeft - kMarginRight,
               kHeight - kMarginTop - kMarginBottom);
    for (int i = 0; i <= 4; ++i) {
        const double v = i / 4.0;
        append_fmt(out,
                   "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                   "stroke=\"#ddd\"/>\n",
                   x_px(v), y_px(0.0), x_px(v), y_px(1.0));
        append_fmt(out,
                   "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                   "stroke=\"#ddd\"/>\n",
                   x_px(0.0), y_px(v), x_px(1.0), y_px(v));
        append_fmt(out,
                   "<text x=\"%.1f\" y=\"%d\" font-size=\"11\" "
                   "text-anchor=\"middle\" fill=\"#333\">%.2f</text>\n",
                   x_px(v), kHeight - kMarginBottom + 16, v);
        append_fmt(out,
                   "<text x=\"%d\" y=\"%.1f\" font-size=\"11\" "
                   "text-anchor=\"end\" fill=\"#333\">%.2f</text>\n",
                   kMarginLeft - 6, y_px(v) + 4, v);
    }
    append_fmt(out,
               "<text x=\"%d\" y=\"24\" font-size=\"14\" fill=\"#111\">%s"
               "</text>\n",
               kMarginLeft, escape_xml(title).c_str());
    append_fmt(out,
               "<text x=\"%.1f\" y=\"%d\" font-size=\"12\" "
               "text-anchor=\"middle\" fill=\"#111\">%s</text>\n",
               x_px(0.5), kHeight - 10, escape_xml(x_label).c_str());
    append_fmt(out,
               "<text x=\"16\" y=\"%.1f\" font-size=\"12\" "
               "text-anchor=\"middle\" fill=\"#111\" "
               "transform=\"rotate(-90 16 %.1f)\">%s</text>\n",
               y_px(0.5), y_px(0.5), escape_xml(y_label).c_str());
}

void append_polyline(std::string& out,
                     const std::vector<std::pair<double, double>>& points,
                     const char* color) {
    out += "<polyline fill=\"none\" stroke=\"";
    out += color;
    out += "\" stroke-width=\"1.5\" points=\"";
    char buf[64];
    for (const auto& [x, y] : points) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x_px(std::clamp(x, 0.0, 1.0)),
                      y_px(std::clamp(y, 0.0, 1.0)));
        out += buf;
    }
    out += "\"/>\n";
}

std::string document(const std::string& body) {
    std::string out;
    append_fmt(out,
               "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
               "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
               kWidth, kHeight, kWidth, kHeight);
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += body;
    out += "</svg>\n";
    return out;
}

}  // namespace

std::string roc_svg(const RocCurve& curve, const std::string& title) {
    std::string body;
    append_frame(body, title, "FAR", "1 - FRR");
    append_polyline(body, {{0.0, 0.0}, {1.0, 1.0}}, "#bbb");
    std::vector<std::pair<double, double>> points;
    points.reserve(curve.points.size());
    for (const auto& point : curve.points)
        points.emplace_back(point.far, 1.0 - point.frr);
    append_polyline(body, points, "#1f6fbf");
    append_fmt(body,
               "<text x=\"%d\" y=\"%d\" font-size=\"12\" fill=\"#333\">"
               "AUC=%.3f EER=%.3f</text>\n",
               kMarginLeft + 8, kMarginTop + 18, curve.auc, curve.eer);
    return document(body);
}

std::string threshold_svg(const RocCurve& curve, const std::string& title) {
    std::string body;
    append_frame(body, title, "threshold", "rate");
    std::vector<std::pair<double, double>> far_points, frr_points;
    for (const auto& point : curve.points) {
        if (point.threshold > 1.0) continue;  // past-the-end marker
        far_points.emplace_back(point.threshold, point.far);
        frr_points.emplace_back(point.threshold, point.frr);
    }
    append_polyline(body, far_points, "#c0392b");
    append_polyline(body, frr_points, "#1f6fbf");
    append_fmt(body,
               "<text x=\"%d\" y=\"%d\" font-size=\"12\" fill=\"#c0392b\">"
               "FAR</text>\n",
               kMarginLeft + 8, kMarginTop + 18);
    append_fmt(body,
               "<text x=\"%d\" y=\"%d\" font-size=\"12\" fill=\"#1f6fbf\">"
               "FRR</text>\n",
               kMarginLeft + 8, kMarginTop + 34);
    return document(body);
}

}  // namespace ksdyn
