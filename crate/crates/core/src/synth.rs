//! Physics-based synthetic thermal scenes: the ground-truth stand-in for
//! unavailable laboratory recordings.
//!
//! Each pixel is an independent 1-D conduction column through the slab:
//! plain concrete for solid pixels, concrete over an air gap for pixels
//! above a void. A constant surface flux with a convective loss heats the
//! column; the insulating gap makes void surfaces heat faster, which is the
//! contrast the detection pipeline learns. Lateral conduction is neglected.
//!
//! Generation is deterministic: the scene seed fans out to a per-pixel noise
//! stream and a smooth low-frequency gain field (non-uniform heating), so
//! cubes are reproducible bit for bit regardless of how pixel work is
//! scheduled.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use libm::{ceil, round, sin};

use crate::cube::ThermalCube;
use crate::error::{Error, Result};
use crate::labeling::{CellLabel, Label, LabelMask, RoiRect};
use crate::rng::{derive_seed, Rng};

/// Seed-stream tags for the scene's independent random draws.
const SEED_TAG_NOISE: u64 = 0x006e_6f69_7365;
const SEED_TAG_GAIN: u64 = 0x6761_696e;

/// Target grid pitch for the conduction columns (m).
const GRID_PITCH: f64 = 5e-4;
const MIN_NODES: usize = 21;
const MAX_NODES: usize = 801;
/// Explicit-stepping sub-step cap per sample interval.
const MAX_SUBSTEPS: usize = 2_000_000;

/// Homogeneous material properties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// W/(m K)
    pub conductivity: f64,
    /// kg/m^3
    pub density: f64,
    /// J/(kg K)
    pub specific_heat: f64,
}

impl Material {
    /// Volumetric heat capacity, J/(m^3 K).
    pub fn volumetric_capacity(&self) -> f64 {
        self.density * self.specific_heat
    }

    /// Thermal diffusivity, m^2/s.
    pub fn diffusivity(&self) -> f64 {
        self.conductivity / self.volumetric_capacity()
    }
}

/// Handbook concrete: k = 1.6 W/(m K), rho = 2300 kg/m^3, c = 880 J/(kg K).
pub const CONCRETE: Material = Material {
    conductivity: 1.6,
    density: 2300.0,
    specific_heat: 880.0,
};

/// Still air filling the void.
pub const AIR: Material = Material {
    conductivity: 0.026,
    density: 1.2,
    specific_heat: 1005.0,
};

/// Description of one synthetic recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub height: usize,
    pub width: usize,
    /// Rectangles whose pixels sit above an air gap; all must carry
    /// [`Label::Void`].
    pub void_rois: Vec<RoiRect>,
    /// Slab depth (m).
    pub slab_thickness: f64,
    /// Concrete above the air gap of a void column (m).
    pub cover_depth: f64,
    pub concrete: Material,
    pub air: Material,
    /// Absorbed surface heat input (W/m^2).
    pub flux: f64,
    /// Convective surface loss coefficient (W/(m^2 K)).
    pub h_conv: f64,
    /// Ambient temperature for the convective loss (deg C).
    pub ambient: f64,
    /// Uniform starting temperature (deg C).
    pub initial: f64,
    /// Heating time covered by the recording (s).
    pub duration: f64,
    /// Frame rate (Hz).
    pub sample_rate: f64,
    /// Per-value gaussian sensor noise (deg C); 0 disables.
    pub noise_sigma: f64,
    /// Peak relative modulation of the temperature rise by the smooth
    /// non-uniform-heating field; 0 disables.
    pub gain_amplitude: f64,
    pub seed: u64,
}

impl SynthScene {
    /// Number of frames the recording holds.
    pub fn frames(&self) -> usize {
        round(self.duration * self.sample_rate) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.height < 1 || self.width < 1 {
            return Err(Error::arg("scene dims must be at least 1x1"));
        }
        for m in [&self.concrete, &self.air] {
            if ![m.conductivity, m.density, m.specific_heat]
                .iter()
                .all(|&v| crate::error::is_positive(v))
            {
                return Err(Error::arg("material properties must be positive"));
            }
        }
        if !crate::error::is_positive(self.slab_thickness)
            || !crate::error::is_positive(self.cover_depth)
        {
            return Err(Error::arg("slab and cover depths must be positive"));
        }
        if self.cover_depth >= self.slab_thickness {
            return Err(Error::arg("cover depth must be smaller than the slab"));
        }
        if !crate::error::is_nonnegative(self.flux) || !crate::error::is_nonnegative(self.h_conv) {
            return Err(Error::arg("flux and convection must be nonnegative"));
        }
        if !crate::error::is_positive(self.duration) || !crate::error::is_positive(self.sample_rate) {
            return Err(Error::arg("duration and sample rate must be positive"));
        }
        if self.frames() < 2 {
            return Err(Error::arg("scene must cover at least 2 frames"));
        }
        if !crate::error::is_nonnegative(self.noise_sigma)
            || !crate::error::is_nonnegative(self.gain_amplitude)
        {
            return Err(Error::arg("noise and gain amplitudes must be nonnegative"));
        }
        if !self.initial.is_finite() || !self.ambient.is_finite() {
            return Err(Error::arg("temperatures must be finite"));
        }
        for (i, roi) in self.void_rois.iter().enumerate() {
            if roi.label != Label::Void {
                return Err(Error::arg(format!("scene ROI {i} must be labeled void")));
            }
            if roi.r0 >= roi.r1 || roi.c0 >= roi.c1 || roi.r1 > self.height || roi.c1 > self.width
            {
                return Err(Error::arg(format!("scene ROI {i} out of bounds")));
            }
        }
        Ok(())
    }

    /// Ground truth: void inside the scene rectangles, solid everywhere else.
    pub fn mask(&self) -> Result<LabelMask> {
        self.validate()?;
        let mut mask = LabelMask::new_unlabeled(self.height, self.width);
        for r in 0..self.height {
            for c in 0..self.width {
                mask.set(r, c, CellLabel::Known(Label::Solid));
            }
        }
        for roi in &self.void_rois {
            for r in roi.r0..roi.r1 {
                for c in roi.c0..roi.c1 {
                    mask.set(r, c, CellLabel::Known(Label::Void));
                }
            }
        }
        Ok(mask)
    }
}

/// Surface-temperature series of one column kind.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceProfile {
    pub kind: Label,
    pub temperatures: Vec<f64>,
}

/// Explicit finite-difference conduction through a layered column.
///
/// Node 0 sits on the heated surface (half control volume) and receives the
/// flux and convective loss; the back face is adiabatic. The interior time
/// step is chosen from the per-node stability limit with a 0.5 safety
/// factor, sub-stepping each sample interval.
pub fn simulate_trace(scene: &SynthScene, kind: Label) -> Result<TraceProfile> {
    scene.validate()?;
    let n_frames = scene.frames();
    let l = scene.slab_thickness;
    let n_nodes = ((l / GRID_PITCH) as usize + 1).clamp(MIN_NODES, MAX_NODES);
    let h = l / (n_nodes - 1) as f64;

    // Node material: concrete above the cover depth; below it, air for void
    // columns and concrete for solid ones.
    let material_at = |i: usize, kind: Label| -> &Material {
        let x = i as f64 * h;
        if kind == Label::Solid || x < scene.cover_depth {
            &scene.concrete
        } else {
            &scene.air
        }
    };
    let layout = |kind: Label| -> (Vec<f64>, Vec<f64>) {
        let mut capacity = vec![0.0; n_nodes];
        for (i, cap) in capacity.iter_mut().enumerate() {
            let full = material_at(i, kind).volumetric_capacity() * h;
            *cap = if i == 0 || i == n_nodes - 1 {
                0.5 * full
            } else {
                full
            };
        }
        // Interface conductance per unit area between nodes i and i+1
        // (harmonic mean of the adjacent conductivities).
        let mut conductance = vec![0.0; n_nodes - 1];
        for (i, g) in conductance.iter_mut().enumerate() {
            let ka = material_at(i, kind).conductivity;
            let kb = material_at(i + 1, kind).conductivity;
            *g = 2.0 * ka * kb / (ka + kb) / h;
        }
        (capacity, conductance)
    };
    let (capacity, conductance) = layout(kind);

    // Per-node stability limit dt <= cap / (sum of incident conductances),
    // taken over the void layout: it is the tighter of the two, and sharing
    // one step size keeps solid and void traces bit-comparable before heat
    // reaches the gap.
    let (stab_capacity, stab_conductance) = layout(Label::Void);
    let mut dt_max = f64::INFINITY;
    for i in 0..n_nodes {
        let mut total = 0.0;
        if i > 0 {
            total += stab_conductance[i - 1];
        }
        if i < n_nodes - 1 {
            total += stab_conductance[i];
        }
        if i == 0 {
            total += scene.h_conv;
        }
        if total > 0.0 {
            dt_max = dt_max.min(stab_capacity[i] / total);
        }
    }
    let dt_safe = 0.5 * dt_max;
    let sample_interval = 1.0 / scene.sample_rate;
    let substeps = ceil(sample_interval / dt_safe) as usize;
    if substeps > MAX_SUBSTEPS {
        return Err(Error::arg(format!(
            "configuration needs {substeps} sub-steps per sample (cap {MAX_SUBSTEPS}); \
             coarsen the sampling or the geometry"
        )));
    }
    let dt = sample_interval / substeps as f64;

    let mut temp = vec![scene.initial; n_nodes];
    let mut next = vec![0.0; n_nodes];
    let mut trace = Vec::with_capacity(n_frames);
    trace.push(temp[0]);
    for _frame in 1..n_frames {
        for _ in 0..substeps {
            for i in 0..n_nodes {
                let mut power = 0.0;
                if i > 0 {
                    power += conductance[i - 1] * (temp[i - 1] - temp[i]);
                }
                if i < n_nodes - 1 {
                    power += conductance[i] * (temp[i + 1] - temp[i]);
                }
                if i == 0 {
                    power += scene.flux + scene.h_conv * (scene.ambient - temp[0]);
                }
                next[i] = temp[i] + dt * power / capacity[i];
            }
            core::mem::swap(&mut temp, &mut next);
        }
        if !temp[0].is_finite() {
            return Err(Error::numeric("conduction solution diverged"));
        }
        trace.push(temp[0]);
    }
    Ok(TraceProfile {
        kind,
        temperatures: trace,
    })
}

/// Smooth low-frequency multiplicative field modeling non-uniform heating.
#[derive(Debug, Clone, PartialEq)]
pub struct GainField {
    amplitude: f64,
    freq_r: f64,
    freq_c: f64,
    phase_r: f64,
    phase_c: f64,
}

impl GainField {
    fn from_seed(amplitude: f64, seed: u64) -> Self {
        let mut rng = Rng::seed_from_u64(derive_seed(seed, SEED_TAG_GAIN));
        GainField {
            amplitude,
            freq_r: 1.0 + rng.below(2) as f64,
            freq_c: 1.0 + rng.below(2) as f64,
            phase_r: rng.uniform(0.0, 2.0 * core::f64::consts::PI),
            phase_c: rng.uniform(0.0, 2.0 * core::f64::consts::PI),
        }
    }

    /// Relative rise modulation at pixel (r, c); bounded by the amplitude.
    pub fn at(&self, r: usize, c: usize, height: usize, width: usize) -> f64 {
        let tau = 2.0 * core::f64::consts::PI;
        let u = (r as f64 + 0.5) / height as f64;
        let v = (c as f64 + 0.5) / width as f64;
        self.amplitude
            * sin(tau * self.freq_r * u + self.phase_r)
            * sin(tau * self.freq_c * v + self.phase_c)
    }
}

/// The two simulated column profiles plus the scene's gain field: everything
/// needed to assemble any pixel's trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneProfiles {
    pub solid: TraceProfile,
    pub void: TraceProfile,
    pub gain: GainField,
    noise_seed: u64,
}

/// Simulates both column kinds once; pixels then share the profiles.
pub fn prepare_profiles(scene: &SynthScene) -> Result<SceneProfiles> {
    Ok(SceneProfiles {
        solid: simulate_trace(scene, Label::Solid)?,
        void: simulate_trace(scene, Label::Void)?,
        gain: GainField::from_seed(scene.gain_amplitude, scene.seed),
        noise_seed: derive_seed(scene.seed, SEED_TAG_NOISE),
    })
}

/// Assembles the trace of pixel (r, c): the column profile for its label,
/// modulated by the gain field, plus the pixel's own seeded noise stream.
/// Depends only on the scene and the pixel index, never on visit order.
pub fn pixel_trace(
    scene: &SynthScene,
    profiles: &SceneProfiles,
    label: Label,
    r: usize,
    c: usize,
) -> Vec<f64> {
    let base = match label {
        Label::Solid => &profiles.solid.temperatures,
        Label::Void => &profiles.void.temperatures,
    };
    let gain = 1.0 + profiles.gain.at(r, c, scene.height, scene.width);
    let mut trace: Vec<f64> = base
        .iter()
        .map(|&t| scene.initial + (t - scene.initial) * gain)
        .collect();
    if scene.noise_sigma > 0.0 {
        let pixel = (r * scene.width + c) as u64;
        let mut rng = Rng::seed_from_u64(derive_seed(profiles.noise_seed, pixel));
        for v in trace.iter_mut() {
            *v += scene.noise_sigma * rng.next_gaussian();
        }
    }
    trace
}

/// Generates the full recording and its ground-truth mask.
pub fn generate_cube(scene: &SynthScene) -> Result<(ThermalCube, LabelMask)> {
    let mask = scene.mask()?;
    let profiles = prepare_profiles(scene)?;
    let n_frames = scene.frames();
    let hw = scene.height * scene.width;
    let mut data = vec![0.0; hw * n_frames];
    for r in 0..scene.height {
        for c in 0..scene.width {
            let p = r * scene.width + c;
            let label = match mask.get(r, c) {
                CellLabel::Known(l) => l,
                CellLabel::Unlabeled => Label::Solid,
            };
            let trace = pixel_trace(scene, &profiles, label, r, c);
            for (t, &v) in trace.iter().enumerate() {
                data[t * hw + p] = v;
            }
        }
    }
    let cube = ThermalCube::new(scene.height, scene.width, n_frames, scene.sample_rate, data)?;
    Ok((cube, mask))
}

/// Named scene presets mirroring the three-dataset protocol: A trains, B (a
/// longer, slower-sampled recording) and C (shorter, cooler, with the voids
/// mirrored) probe generalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenePreset {
    A,
    B,
    C,
}

impl ScenePreset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "A" | "a" => Ok(ScenePreset::A),
            "B" | "b" => Ok(ScenePreset::B),
            "C" | "c" => Ok(ScenePreset::C),
            other => Err(Error::arg(format!("unknown scene preset '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenePreset::A => "A",
            ScenePreset::B => "B",
            ScenePreset::C => "C",
        }
    }

    pub fn scene(&self, seed: u64) -> SynthScene {
        let base_voids = vec![
            RoiRect::new(Label::Void, 25, 20, 65, 50),
            RoiRect::new(Label::Void, 25, 90, 65, 120),
        ];
        let base = SynthScene {
            height: 90,
            width: 160,
            void_rois: base_voids,
            slab_thickness: 0.10,
            cover_depth: 0.03,
            concrete: CONCRETE,
            air: AIR,
            flux: 300.0,
            h_conv: 8.0,
            ambient: 28.0,
            initial: 28.0,
            duration: 1800.0,
            sample_rate: 0.2,
            noise_sigma: 0.05,
            gain_amplitude: 0.02,
            seed,
        };
        match self {
            // 360 frames at 0.2 Hz, ~7 deg C mean rise from 28.
            ScenePreset::A => base,
            // 292 frames at 0.1 Hz from 26 deg C, same rise envelope.
            ScenePreset::B => SynthScene {
                ambient: 26.0,
                initial: 26.0,
                duration: 2920.0,
                sample_rate: 0.1,
                flux: 230.0,
                ..base
            },
            // 200 frames at 0.2 Hz from 25 deg C, smaller rise, voids
            // flipped to the opposite side.
            ScenePreset::C => SynthScene {
                void_rois: base
                    .void_rois
                    .iter()
                    .map(|roi| roi.mirrored_horizontal(base.width))
                    .collect(),
                ambient: 25.0,
                initial: 25.0,
                duration: 1000.0,
                sample_rate: 0.2,
                flux: 115.0,
                ..base
            },
        }
    }
}

/// Default training ROIs for a two-void scene: the void rectangles inset by
/// a fifth per side, one solid strip on each flank, and one between the
/// voids: two positive and three negative regions.
pub fn training_rois(scene: &SynthScene) -> Result<Vec<RoiRect>> {
    if scene.void_rois.len() != 2 {
        return Err(Error::arg(
            "default training ROIs assume exactly two void regions",
        ));
    }
    let mut voids = scene.void_rois.clone();
    voids.sort_by_key(|r| r.c0);
    let (first, second) = (voids[0], voids[1]);

    let inset = |roi: &RoiRect| -> RoiRect {
        let dr = (roi.r1 - roi.r0) / 5;
        let dc = (roi.c1 - roi.c0) / 5;
        RoiRect::new(Label::Void, roi.r0 + dr, roi.c0 + dc, roi.r1 - dr, roi.c1 - dc)
    };
    let v1 = inset(&first);
    let v2 = inset(&second);
    let rows = (v1.r0.min(v2.r0), v1.r1.max(v2.r1));

    // Margins scale with the frame so small scenes stay usable; the 90x160
    // presets get an 8-pixel gap and strip.
    let gap = (scene.width / 20).max(2);
    let strip = (scene.width / 20).max(2);
    if first.c0 < gap + strip || second.c1 + gap + strip > scene.width {
        return Err(Error::arg("void regions leave no room for solid strips"));
    }
    let left = RoiRect::new(
        Label::Solid,
        rows.0,
        first.c0 - gap - strip,
        rows.1,
        first.c0 - gap,
    );
    let right = RoiRect::new(
        Label::Solid,
        rows.0,
        second.c1 + gap,
        rows.1,
        second.c1 + gap + strip,
    );
    let between_lo = first.c1 + gap;
    let between_hi = second.c0.saturating_sub(gap);
    if between_lo + 2 > between_hi {
        return Err(Error::arg("void regions leave no room between them"));
    }
    let center = (between_lo + between_hi) / 2;
    let half = ((between_hi - between_lo) / 2).clamp(1, 10);
    let middle = RoiRect::new(Label::Solid, rows.0, center - half, rows.1, center + half);

    Ok(vec![v1, v2, left, middle, right])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::mean_curve;
    use libm::sqrt;

    fn quiet_scene() -> SynthScene {
        let mut scene = ScenePreset::A.scene(1);
        scene.noise_sigma = 0.0;
        scene.gain_amplitude = 0.0;
        scene
    }

    #[test]
    fn zero_flux_stays_at_equilibrium() {
        let mut scene = quiet_scene();
        scene.flux = 0.0;
        scene.duration = 100.0;
        scene.sample_rate = 0.2;
        let trace = simulate_trace(&scene, Label::Solid).unwrap();
        for &t in &trace.temperatures {
            assert_eq!(t, scene.initial);
        }
    }

    #[test]
    fn semi_infinite_constant_flux_oracle() {
        // Thick slab, no convection, short time: the closed-form constant
        // flux solution gives the surface rise 2 q sqrt(alpha t / pi) / k.
        let mut scene = quiet_scene();
        scene.slab_thickness = 0.06;
        scene.cover_depth = 0.03;
        scene.h_conv = 0.0;
        scene.flux = 500.0;
        scene.duration = 70.0;
        scene.sample_rate = 1.0;
        let trace = simulate_trace(&scene, Label::Solid).unwrap();
        let t = 60.0;
        let alpha = scene.concrete.diffusivity();
        let analytic = 2.0 * scene.flux * sqrt(alpha * t / core::f64::consts::PI)
            / scene.concrete.conductivity;
        let simulated = trace.temperatures[60] - scene.initial;
        let rel = (simulated - analytic).abs() / analytic;
        assert!(
            rel <= 0.03,
            "simulated rise {simulated:.4} vs analytic {analytic:.4} (rel {rel:.4})"
        );
    }

    #[test]
    fn void_runs_hotter_than_solid_after_thirty_seconds() {
        let scene = quiet_scene();
        let solid = simulate_trace(&scene, Label::Solid).unwrap();
        let void = simulate_trace(&scene, Label::Void).unwrap();
        let start = (30.0 * scene.sample_rate) as usize;
        for t in start..scene.frames() {
            assert!(
                void.temperatures[t] >= solid.temperatures[t],
                "void cooler at frame {t}"
            );
        }
        // And strictly hotter by the end.
        let last = scene.frames() - 1;
        assert!(void.temperatures[last] > solid.temperatures[last] + 0.5);
    }

    #[test]
    fn heating_without_convection_is_strictly_increasing() {
        let mut scene = quiet_scene();
        scene.h_conv = 0.0;
        scene.duration = 300.0;
        let trace = simulate_trace(&scene, Label::Solid).unwrap();
        for w in trace.temperatures.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn simulated_temperatures_stay_in_energy_bounds() {
        let scene = ScenePreset::A.scene(3);
        let (cube, _) = generate_cube(&scene).unwrap();
        let cap = scene.concrete.volumetric_capacity() * scene.slab_thickness;
        let upper = scene.initial + scene.flux * scene.duration / cap + 50.0;
        let lower = scene.initial - 5.0;
        for &v in cube.data() {
            assert!(v >= lower && v <= upper, "value {v} outside [{lower}, {upper}]");
        }
    }

    #[test]
    fn generation_is_bit_deterministic() {
        let scene = ScenePreset::C.scene(11);
        let (a, _) = generate_cube(&scene).unwrap();
        let (b, _) = generate_cube(&scene).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_pixels_of_a_kind_are_identical() {
        let mut scene = quiet_scene();
        scene.duration = 200.0;
        let (cube, mask) = generate_cube(&scene).unwrap();
        let t = cube.frames() - 1;
        let mut solid_value = None;
        let mut void_value = None;
        for r in 0..cube.height() {
            for c in 0..cube.width() {
                let v = cube.at(r, c, t);
                match mask.get(r, c) {
                    CellLabel::Known(Label::Solid) => {
                        let expect = *solid_value.get_or_insert(v);
                        assert_eq!(v, expect);
                    }
                    CellLabel::Known(Label::Void) => {
                        let expect = *void_value.get_or_insert(v);
                        assert_eq!(v, expect);
                    }
                    CellLabel::Unlabeled => panic!("mask must label everything"),
                }
            }
        }
    }

    #[test]
    fn noiseless_separability_at_final_frame() {
        let mut scene = ScenePreset::A.scene(5);
        scene.noise_sigma = 0.0; // keep the default gain field
        let (cube, mask) = generate_cube(&scene).unwrap();
        let t = cube.frames() - 1;
        let mut min_void = f64::INFINITY;
        let mut max_solid = f64::NEG_INFINITY;
        for r in 0..cube.height() {
            for c in 0..cube.width() {
                let v = cube.at(r, c, t);
                match mask.get(r, c) {
                    CellLabel::Known(Label::Void) => min_void = min_void.min(v),
                    _ => max_solid = max_solid.max(v),
                }
            }
        }
        assert!(
            min_void > max_solid,
            "coolest void {min_void} not hotter than warmest solid {max_solid}"
        );
    }

    #[test]
    fn preset_frame_counts_match_protocol() {
        assert_eq!(ScenePreset::A.scene(0).frames(), 360);
        assert_eq!(ScenePreset::B.scene(0).frames(), 292);
        assert_eq!(ScenePreset::C.scene(0).frames(), 200);
        let a = ScenePreset::A.scene(0);
        assert_eq!((a.height, a.width), (90, 160));
        assert_eq!(a.sample_rate, 0.2);
        assert_eq!(ScenePreset::B.scene(0).sample_rate, 0.1);
    }

    #[test]
    fn preset_c_mask_is_mirrored_preset_a() {
        let a = ScenePreset::A.scene(0).mask().unwrap();
        let c = ScenePreset::C.scene(0).mask().unwrap();
        for r in 0..a.height() {
            for col in 0..a.width() {
                assert_eq!(a.get(r, col), c.get(r, a.width() - 1 - col));
            }
        }
    }

    #[test]
    fn preset_a_mean_rise_near_seven_degrees() {
        let scene = ScenePreset::A.scene(7);
        let (cube, _) = generate_cube(&scene).unwrap();
        let curve = mean_curve(&cube);
        let rise = curve.last().unwrap().1 - curve.first().unwrap().1;
        assert!(
            (6.0..=8.0).contains(&rise),
            "mean rise {rise:.2} outside the calibration window"
        );
    }

    #[test]
    fn heating_cube_mean_curve_is_nondecreasing() {
        let mut scene = quiet_scene();
        scene.height = 10;
        scene.width = 16;
        scene.void_rois = vec![RoiRect::new(Label::Void, 2, 2, 8, 7)];
        scene.duration = 300.0;
        let (cube, _) = generate_cube(&scene).unwrap();
        let curve = mean_curve(&cube);
        for w in curve.windows(2) {
            assert!(w[1].1 >= w[0].1, "mean fell from {} to {}", w[0].1, w[1].1);
        }
    }

    #[test]
    fn preset_c_rise_is_smaller() {
        let (cube_c, _) = generate_cube(&ScenePreset::C.scene(7)).unwrap();
        let curve = mean_curve(&cube_c);
        let rise = curve.last().unwrap().1 - curve.first().unwrap().1;
        assert!((1.0..=3.5).contains(&rise), "scene C rise {rise:.2}");
    }

    #[test]
    fn gain_field_is_bounded_and_smooth() {
        let field = GainField::from_seed(0.02, 9);
        let mut prev = None;
        for c in 0..160 {
            let g = field.at(45, c, 90, 160);
            assert!(g.abs() <= 0.02 + 1e-12);
            if let Some(p) = prev {
                let step: f64 = g - p;
                assert!(step.abs() < 0.004, "gain jumps by {step}");
            }
            prev = Some(g);
        }
    }

    #[test]
    fn unstable_configuration_is_rejected() {
        let mut scene = quiet_scene();
        // Absurdly slow sampling forces more sub-steps than the cap allows.
        scene.sample_rate = 1e-5;
        scene.duration = 2.0 / scene.sample_rate;
        assert!(simulate_trace(&scene, Label::Void).is_err());
    }

    #[test]
    fn scene_validation_catches_bad_geometry() {
        let mut scene = quiet_scene();
        scene.cover_depth = scene.slab_thickness;
        assert!(scene.validate().is_err());
        let mut scene = quiet_scene();
        scene.void_rois[0].c1 = scene.width + 1;
        assert!(scene.validate().is_err());
        let mut scene = quiet_scene();
        scene.void_rois[0].label = Label::Solid;
        assert!(scene.validate().is_err());
    }

    #[test]
    fn training_rois_cover_both_classes_inside_bounds() {
        let scene = ScenePreset::A.scene(0);
        let rois = training_rois(&scene).unwrap();
        assert_eq!(rois.len(), 5);
        assert_eq!(rois.iter().filter(|r| r.label == Label::Void).count(), 2);
        assert_eq!(rois.iter().filter(|r| r.label == Label::Solid).count(), 3);
        let mask = scene.mask().unwrap();
        for roi in &rois {
            assert!(roi.r1 <= scene.height && roi.c1 <= scene.width);
            // Every training pixel's label must agree with the ground truth.
            for r in roi.r0..roi.r1 {
                for c in roi.c0..roi.c1 {
                    assert_eq!(mask.get(r, c), CellLabel::Known(roi.label));
                }
            }
        }
        // The mirrored preset works too.
        assert!(training_rois(&ScenePreset::C.scene(0)).is_ok());
    }
}
