// Command-line front end: PLY in/out, geometry and attribute codecs,
// metrics, and sweep drivers. Every successful run prints one key=value
// record per result line on stdout.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "bvpc/attr/codec.hpp"
#include "bvpc/eval/metrics.hpp"
#include "bvpc/eval/sweeps.hpp"
#include "bvpc/geom/codec.hpp"
#include "bvpc/geom/normals.hpp"
#include "bvpc/geom/pruning.hpp"
#include "bvpc/io/ply.hpp"
#include "bvpc/io/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitFile = 3;
constexpr int kExitFormat = 4;

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

int infer_depth(const bvpc::PlyDocument& doc) {
  double maxc = 0.0;
  bool integral = true;
  for (const auto& p : doc.positions)
    for (int a = 0; a < 3; ++a) {
      maxc = std::max(maxc, p[a]);
      if (p[a] != std::floor(p[a]) || p[a] < 0.0) integral = false;
    }
  if (!integral)
    throw std::runtime_error("--depth is required for non-integer input coordinates");
  int d = 1;
  while ((1u << d) <= static_cast<uint64_t>(maxc) && d < 21) ++d;
  return d;
}

bvpc::VoxelCloud load_cloud(const std::string& path, int depth) {
  const bvpc::PlyDocument doc = bvpc::read_ply(path);
  if (depth <= 0) depth = infer_depth(doc);
  return bvpc::to_voxel_cloud(doc, depth);
}

struct PruneSpec {
  std::string method;
  double value = 0.0;
};

PruneSpec parse_prune(const std::string& s) {
  const size_t colon = s.find(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("--prune", "expected method:value, e.g. fixed:6 or rd:4.0");
  PruneSpec spec;
  spec.method = s.substr(0, colon);
  if (spec.method != "fixed" && spec.method != "zero" && spec.method != "dist" &&
      spec.method != "rd")
    throw CLI::ValidationError("--prune", "method must be one of fixed, zero, dist, rd");
  spec.value = std::stod(s.substr(colon + 1));
  return spec;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << header << "\n";
  for (const auto& r : rows) out << r << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voxelized point cloud codec: level-set geometry and hierarchical attributes"};
  app.require_subcommand(1);

  // encode-geometry
  auto* enc_geo = app.add_subcommand("encode-geometry", "Compress geometry to a .bvpc stream");
  std::string eg_in, eg_out, eg_prune = "rd:16";
  int eg_depth = 0, eg_start = 2;
  double eg_qstep = 1.0;
  enc_geo->add_option("--in", eg_in, "input PLY")->required();
  enc_geo->add_option("--out", eg_out, "output .bvpc")->required();
  enc_geo->add_option("--depth", eg_depth, "voxel bit depth (inferred when omitted)");
  enc_geo->add_option("--start-level", eg_start, "coarsest coded octree level")->check(CLI::NonNegativeNumber);
  enc_geo->add_option("--qstep", eg_qstep, "quantization stepsize")->check(CLI::PositiveNumber);
  enc_geo->add_option("--prune", eg_prune, "pruning method:value (fixed:L zero:t dist:e rd:lambda)");

  // decode-geometry
  auto* dec_geo = app.add_subcommand("decode-geometry", "Decode a .bvpc stream to PLY");
  std::string dg_in, dg_out, dg_method = "subdiv";
  dec_geo->add_option("--in", dg_in, "input .bvpc")->required();
  dec_geo->add_option("--out", dg_out, "output PLY")->required();
  dec_geo->add_option("--reconstruct", dg_method, "subdiv | raycast:r");

  // encode-attributes
  auto* enc_attr = app.add_subcommand("encode-attributes", "Compress attributes to a .bvat stream");
  std::string ea_in, ea_out;
  int ea_depth = 0, ea_order = 2, ea_base = 0;
  double ea_qstep = 1.0;
  bool ea_no_yuv = false;
  enc_attr->add_option("--in", ea_in, "input PLY")->required();
  enc_attr->add_option("--out", ea_out, "output .bvat")->required();
  enc_attr->add_option("--depth", ea_depth, "voxel bit depth (inferred when omitted)");
  enc_attr->add_option("--order", ea_order, "B-spline order: 1 or 2")->check(CLI::Range(1, 2));
  enc_attr->add_option("--base-level", ea_base, "coarsest transform level");
  enc_attr->add_option("--qstep", ea_qstep, "quantization stepsize")->check(CLI::PositiveNumber);
  enc_attr->add_flag("--no-yuv", ea_no_yuv, "skip the RGB to YUV color transform");

  // decode-attributes
  auto* dec_attr = app.add_subcommand("decode-attributes", "Decode a .bvat stream against known geometry");
  std::string da_in, da_geo, da_out;
  dec_attr->add_option("--in", da_in, "input .bvat")->required();
  dec_attr->add_option("--geometry", da_geo, "PLY with the losslessly known positions")->required();
  dec_attr->add_option("--out", da_out, "output PLY with decoded colors")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Compare two clouds");
  std::string ev_ref, ev_test, ev_metric = "d1";
  int ev_depth = 0;
  eval->add_option("--ref", ev_ref, "reference PLY")->required();
  eval->add_option("--test", ev_test, "test PLY")->required();
  eval->add_option("--metric", ev_metric, "d1 | y");
  eval->add_option("--depth", ev_depth, "voxel bit depth (inferred when omitted)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Energy-compaction or rate-distortion sweeps");
  std::string sw_mode, sw_out, sw_in, sw_shape = "sphere", sw_field = "smooth-gradient";
  std::string sw_grid, sw_reconstruct = "subdiv";
  int sw_depth = 6, sw_start = 2;
  double sw_qstep = 1.0, sw_radius = 0.3;
  sweep->add_option("--mode", sw_mode, "compaction | rd")->required();
  sweep->add_option("--out", sw_out, "output CSV")->required();
  sweep->add_option("--in", sw_in, "input PLY (synthesized when omitted)");
  sweep->add_option("--shape", sw_shape, "synthetic shape when --in is omitted");
  sweep->add_option("--field", sw_field, "synthetic attribute field");
  sweep->add_option("--depth", sw_depth, "voxel bit depth");
  sweep->add_option("--radius", sw_radius, "synthetic shape radius fraction");
  sweep->add_option("--start-level", sw_start, "geometry start level (rd mode)");
  sweep->add_option("--qstep", sw_qstep, "quantization stepsize (rd mode)");
  sweep->add_option("--grid", sw_grid, "comma-separated prune specs, e.g. fixed:4,rd:16");
  sweep->add_option("--reconstruct", sw_reconstruct, "subdiv | raycast:r (rd mode)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic voxelized surface");
  std::string sy_shape = "sphere", sy_field = "smooth-gradient", sy_out;
  int sy_depth = 6;
  double sy_radius = 0.3;
  uint64_t sy_seed = 0;
  synth->add_option("--shape", sy_shape, "sphere | plane | torus");
  synth->add_option("--depth", sy_depth, "voxel bit depth")->check(CLI::Range(1, 9));
  synth->add_option("--field", sy_field, "smooth-gradient | checker");
  synth->add_option("--radius", sy_radius, "radius as a fraction of the cube side");
  synth->add_option("--seed", sy_seed, "recorded seed (shapes are deterministic)");
  synth->add_option("--out", sy_out, "output PLY")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*enc_geo) {
      bvpc::VoxelCloud cloud = load_cloud(eg_in, eg_depth);
      bvpc::ensure_normals(cloud);
      const bvpc::OctreeLevels octree(cloud);
      if (eg_start > octree.depth())
        throw std::runtime_error("--start-level exceeds the octree depth");
      const bvpc::SdfField sdf = bvpc::compute_sdf(cloud, octree);
      const PruneSpec spec = parse_prune(eg_prune);
      if (spec.method == "fixed" && spec.value < eg_start)
        throw std::runtime_error("--prune fixed level must not be above --start-level");
      bvpc::PrunedOctree pruned;
      if (spec.method == "fixed") {
        pruned = bvpc::prune_fixed(octree, static_cast<int>(spec.value));
      } else {
        const bvpc::PruneContext ctx =
            bvpc::PruneContext::make(cloud, octree, sdf, eg_start, eg_qstep);
        pruned = bvpc::run_pruner(octree, ctx, spec.method, spec.value);
      }
      const bvpc::GeometryStream stream =
          bvpc::encode_geometry_stream(octree, sdf, pruned, eg_start, eg_qstep);
      write_file(eg_out, stream.bytes);
      std::cout << "event=encode-geometry in=" << eg_in << " out=" << eg_out
                << " voxels=" << cloud.size() << " depth=" << cloud.depth
                << " bytes=" << stream.bytes.size() << " bits_per_voxel="
                << 8.0 * stream.bytes.size() / static_cast<double>(cloud.size()) << "\n";
      for (const auto& [name, bits] : stream.section_bits)
        std::cout << "section=" << name << " bits=" << bits << "\n";
    } else if (*dec_geo) {
      const bvpc::DecodedGeometry decoded = bvpc::parse_geometry_stream(read_file(dg_in));
      bvpc::ReconstructMethod method = bvpc::ReconstructMethod::subdivision;
      double range = 0.0;
      if (dg_method != "subdiv") {
        if (dg_method.rfind("raycast", 0) != 0)
          throw std::runtime_error("--reconstruct must be subdiv or raycast:r");
        method = bvpc::ReconstructMethod::raycast;
        const size_t colon = dg_method.find(':');
        if (colon != std::string::npos) range = std::stod(dg_method.substr(colon + 1));
      }
      const bvpc::VoxelCloud cloud = bvpc::reconstruct_geometry(decoded, method, range);
      bvpc::write_ply(cloud, dg_out);
      std::cout << "event=decode-geometry in=" << dg_in << " out=" << dg_out
                << " voxels=" << cloud.size() << " depth=" << cloud.depth << "\n";
    } else if (*enc_attr) {
      bvpc::VoxelCloud cloud = load_cloud(ea_in, ea_depth);
      if (cloud.attr_dim == 0) throw std::runtime_error("input has no attributes");
      const bvpc::OctreeLevels octree(cloud);
      const bvpc::BasisOrder order =
          ea_order == 1 ? bvpc::BasisOrder::constant : bvpc::BasisOrder::trilinear;
      const int base = ea_order == 1 ? 3 * ea_base : ea_base;
      const bvpc::AttributeStream stream =
          bvpc::encode_attributes(cloud, octree, order, base, ea_qstep, !ea_no_yuv);
      write_file(ea_out, stream.bytes);
      std::cout << "event=encode-attributes in=" << ea_in << " out=" << ea_out
                << " voxels=" << cloud.size() << " order=" << ea_order
                << " bytes=" << stream.bytes.size() << " bits_per_voxel="
                << 8.0 * stream.bytes.size() / static_cast<double>(cloud.size()) << "\n";
    } else if (*dec_attr) {
      const std::vector<uint8_t> bytes = read_file(da_in);
      const bvpc::Container header = bvpc::Container::parse(bytes, "BVAT");
      bvpc::VoxelCloud geometry = load_cloud(da_geo, header.depth);
      const bvpc::OctreeLevels octree(geometry);
      const Eigen::MatrixXd values = bvpc::decode_attributes(bytes, geometry, octree);
      geometry.attr_dim = static_cast<int>(values.cols());
      geometry.attributes.resize(geometry.size() * values.cols());
      for (size_t i = 0; i < geometry.size(); ++i)
        for (int k = 0; k < geometry.attr_dim; ++k) geometry.attr(i)[k] = values(i, k);
      bvpc::write_ply(geometry, da_out);
      std::cout << "event=decode-attributes in=" << da_in << " geometry=" << da_geo
                << " out=" << da_out << " voxels=" << geometry.size() << "\n";
    } else if (*eval) {
      bvpc::PlyDocument ref_doc = bvpc::read_ply(ev_ref);
      const int depth = ev_depth > 0 ? ev_depth : infer_depth(ref_doc);
      const bvpc::VoxelCloud ref = bvpc::to_voxel_cloud(ref_doc, depth);
      const bvpc::VoxelCloud test = load_cloud(ev_test, depth);
      double value;
      if (ev_metric == "d1") {
        value = bvpc::psnr_d1(ref, test);
      } else if (ev_metric == "y") {
        if (ref.size() != test.size())
          throw std::runtime_error("metric y requires identical voxel sets");
        value = bvpc::psnr_y(bvpc::cloud_attributes(ref), bvpc::cloud_attributes(test));
      } else {
        throw std::runtime_error("--metric must be d1 or y");
      }
      std::cout << "event=evaluate metric=" << ev_metric << " ref=" << ev_ref
                << " test=" << ev_test << " psnr_db=" << value << "\n";
    } else if (*sweep) {
      bvpc::VoxelCloud cloud;
      if (!sw_in.empty()) {
        cloud = load_cloud(sw_in, sw_depth);
      } else {
        cloud = bvpc::synth_cloud(bvpc::parse_shape(sw_shape), sw_depth,
                                  bvpc::parse_field(sw_field), 0, sw_radius);
      }
      if (sw_mode == "compaction") {
        const bvpc::OctreeLevels octree(cloud);
        std::vector<std::string> rows;
        for (auto order : {bvpc::BasisOrder::constant, bvpc::BasisOrder::trilinear}) {
          const auto curve = bvpc::energy_compaction_sweep(cloud, octree, order);
          const std::string name = order == bvpc::BasisOrder::constant ? "raht" : "bv";
          for (const auto& p : curve)
            rows.push_back(name + ",L=" + std::to_string(p.level) + "," +
                           std::to_string(p.coefficients) + "," + std::to_string(p.y_psnr) +
                           ",");
        }
        write_csv(sw_out, "method,params,nonzero_coefficients,y_psnr_db,error", rows);
        std::cout << "event=sweep mode=compaction out=" << sw_out << " rows=" << rows.size()
                  << "\n";
      } else if (sw_mode == "rd") {
        std::vector<bvpc::RdConfig> grid;
        bvpc::ReconstructMethod method = bvpc::ReconstructMethod::subdivision;
        double range = 0.0;
        if (sw_reconstruct.rfind("raycast", 0) == 0) {
          method = bvpc::ReconstructMethod::raycast;
          const size_t colon = sw_reconstruct.find(':');
          if (colon != std::string::npos) range = std::stod(sw_reconstruct.substr(colon + 1));
        }
        std::vector<std::string> specs;
        if (sw_grid.empty()) {
          for (int l = 3; l <= std::min(sw_depth, 8); ++l)
            specs.push_back("fixed:" + std::to_string(l));
          for (double lam : {1.0, 16.0, 256.0}) specs.push_back("rd:" + std::to_string(lam));
        } else {
          std::stringstream ss(sw_grid);
          std::string item;
          while (std::getline(ss, item, ',')) specs.push_back(item);
        }
        for (const auto& s : specs) {
          const PruneSpec p = parse_prune(s);
          bvpc::RdConfig cfg;
          cfg.method = p.method;
          cfg.value = p.value;
          cfg.start_level = sw_start;
          cfg.stepsize = sw_qstep;
          cfg.reconstruct = method;
          cfg.raycast_range = range;
          grid.push_back(cfg);
        }
        const auto points = bvpc::rd_sweep(cloud, grid);
        std::vector<std::string> rows;
        for (const auto& p : points)
          rows.push_back(p.method + "," + p.params + "," + std::to_string(p.bits_per_voxel) +
                         "," + std::to_string(p.d1_psnr) + "," + p.error);
        write_csv(sw_out, "method,params,bits_per_voxel,d1_psnr_db,error", rows);
        std::cout << "event=sweep mode=rd out=" << sw_out << " rows=" << rows.size() << "\n";
      } else {
        throw std::runtime_error("--mode must be compaction or rd");
      }
    } else if (*synth) {
      const bvpc::VoxelCloud cloud = bvpc::synth_cloud(
          bvpc::parse_shape(sy_shape), sy_depth, bvpc::parse_field(sy_field), sy_seed, sy_radius);
      bvpc::write_ply(cloud, sy_out);
      std::cout << "event=synth shape=" << sy_shape << " depth=" << sy_depth
                << " out=" << sy_out << " voxels=" << cloud.size() << "\n";
    }
  } catch (const bvpc::PlyError& e) {
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    if (what.find("cannot open") != std::string::npos ||
        what.find("cannot write") != std::string::npos)
      return kExitFile;
    return kExitFormat;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFile;
  } catch (const std::exception& e) {
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    if (what.find("cannot open") != std::string::npos ||
        what.find("cannot write") != std::string::npos ||
        what.find("write failed") != std::string::npos)
      return kExitFile;
    if (what.find("magic mismatch") != std::string::npos ||
        what.find("version mismatch") != std::string::npos ||
        what.find("container") != std::string::npos ||
        what.find("checksum") != std::string::npos)
      return kExitFormat;
    return kExitRuntime;
  }
  return kExitOk;
}
