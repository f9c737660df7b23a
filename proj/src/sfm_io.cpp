#include "outlr/error.hpp"
#include "outlr/sfm.hpp"

#include <Eigen/LU>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace outlr {

namespace {

[[noreturn]] void data_error(const std::string& path, std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::DataError, path + ":" + std::to_string(line) + ": " + msg);
}

// Calls fn(tokens, line_number) for every non-empty line with comments stripped.
template <typename Fn>
void for_each_record(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::DataError, "cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    for (std::string tok; ss >> tok;) tokens.push_back(tok);
    if (!tokens.empty()) fn(tokens, lineno);
  }
}

template <typename T>
T parse_token(const std::string& tok, const std::string& path, std::size_t line, const char* field) {
  std::istringstream ss(tok);
  T value{};
  ss >> value;
  if (ss.fail() || !ss.eof()) data_error(path, line, std::string("cannot parse ") + field + " from '" + tok + "'");
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(value)) data_error(path, line, std::string(field) + " is not finite");
  return value;
}

struct NumberedObservation {
  Observation obs;
  std::size_t line;
};

std::vector<NumberedObservation> read_observations(const std::string& path) {
  std::vector<NumberedObservation> out;
  for_each_record(path, [&](const std::vector<std::string>& t, std::size_t line) {
    if (t.size() != 4) data_error(path, line, "expected 4 fields (point_id camera_id z1 z2), got " + std::to_string(t.size()));
    Observation o;
    o.point_id = parse_token<int>(t[0], path, line, "point_id");
    o.camera_id = parse_token<int>(t[1], path, line, "camera_id");
    o.z1 = parse_token<double>(t[2], path, line, "z1");
    o.z2 = parse_token<double>(t[3], path, line, "z2");
    out.push_back({o, line});
  });
  return out;
}

}  // namespace

std::vector<Camera> load_cameras(const std::string& path) {
  std::vector<Camera> cams;
  std::set<int> ids;
  for_each_record(path, [&](const std::vector<std::string>& t, std::size_t line) {
    if (t.size() != 10) data_error(path, line, "expected 10 fields (camera_id r11 .. r33), got " + std::to_string(t.size()));
    Camera cam;
    cam.id = parse_token<int>(t[0], path, line, "camera_id");
    for (int k = 0; k < 9; ++k) cam.rotation(k / 3, k % 3) = parse_token<double>(t[1 + k], path, line, "rotation entry");
    const Eigen::Matrix3d& R = cam.rotation;
    if ((R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
        std::abs(R.determinant() - 1.0) > 1e-6)
      data_error(path, line, "rotation of camera " + std::to_string(cam.id) + " is not orthonormal with det +1");
    if (!ids.insert(cam.id).second) data_error(path, line, "duplicate camera id " + std::to_string(cam.id));
    cams.push_back(cam);
  });
  if (cams.size() < 2) throw Error(ErrorCode::DataError, path + ": at least two cameras are required");
  return cams;
}

std::vector<Observation> load_observations(const std::string& path) {
  std::vector<Observation> out;
  for (auto& n : read_observations(path)) out.push_back(n.obs);
  return out;
}

KnownRotationProblem load_problem(const std::string& cameras_path, const std::string& observations_path) {
  auto cams = load_cameras(cameras_path);
  std::set<int> cam_ids;
  for (const auto& c : cams) cam_ids.insert(c.id);
  std::vector<Observation> obs;
  for (auto& n : read_observations(observations_path)) {
    if (!cam_ids.count(n.obs.camera_id))
      data_error(observations_path, n.line, "unknown camera id " + std::to_string(n.obs.camera_id));
    obs.push_back(n.obs);
  }
  try {
    return KnownRotationProblem(std::move(cams), std::move(obs));
  } catch (const Error& e) {
    throw Error(ErrorCode::DataError, observations_path + ": " + e.what());
  }
}

void save_cameras(const std::string& path, const std::vector<Camera>& cameras) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::DataError, "cannot write " + path);
  out << "# camera_id r11 r12 r13 r21 r22 r23 r31 r32 r33\n" << std::setprecision(17);
  for (const auto& c : cameras) {
    out << c.id;
    for (int k = 0; k < 9; ++k) out << ' ' << c.rotation(k / 3, k % 3);
    out << '\n';
  }
}

void save_observations(const std::string& path, const std::vector<Observation>& observations) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::DataError, "cannot write " + path);
  out << "# point_id camera_id z1 z2\n" << std::setprecision(17);
  for (const auto& o : observations) out << o.point_id << ' ' << o.camera_id << ' ' << o.z1 << ' ' << o.z2 << '\n';
}

}  // namespace outlr
