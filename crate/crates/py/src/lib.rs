//! Python module `handwave`. Sequences cross the boundary as lists and
//! binary formats as `bytes`; errors surface as `ValueError`.

use handwave_core::geometry::fixture::fixture_surface;
use handwave_core::geometry::io::{read_ply, read_xyz};
use handwave_core::geometry::{build_surface, register_sensors, HandSurface, DEFAULT_NEIGHBORS};
use handwave_core::recon::{self, WeightField, WeightParams};
use handwave_core::signal::{self, ProjectionOptions, ScalarChannel, SimilarityOptions};
use handwave_core::sim::{self, Scenario, TissueParams};
use handwave_core::wire::{self, BusTopology};
use handwave_core::{default_config, FullScale, SensorId};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn sensor(id: u32) -> PyResult<SensorId> {
    SensorId::new(id).map_err(err)
}

/// Decoded acquisition recording.
#[pyclass(name = "FrameStream", module = "handwave")]
struct PyFrameStream {
    inner: handwave_core::FrameStream,
}

#[pymethods]
impl PyFrameStream {
    #[staticmethod]
    #[pyo3(signature = (text, rate = handwave_core::DEFAULT_RATE_HZ, range_g = 2.0))]
    fn from_csv(text: &str, rate: f64, range_g: f64) -> PyResult<Self> {
        let range = FullScale::from_g(range_g).map_err(err)?;
        Ok(PyFrameStream { inner: wire::frames_from_csv(text, rate, range).map_err(err)? })
    }

    fn to_csv(&self) -> String {
        wire::frames_to_csv(&self.inner)
    }

    fn encode<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &wire::encode_stream(&self.inner).map_err(err)?))
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate
    }

    #[getter]
    fn range_g(&self) -> u8 {
        self.inner.range.g()
    }

    fn sensors(&self) -> Vec<u32> {
        self.inner.sensors().iter().map(|s| u32::from(s.get())).collect()
    }

    fn indices(&self) -> Vec<u64> {
        self.inner.frames.iter().map(|f| f.index).collect()
    }

    /// Raw counts of one sensor, one `[x, y, z]` per frame.
    fn counts(&self, sensor_id: u32) -> PyResult<Vec<[i16; 3]>> {
        let id = sensor(sensor_id)?;
        self.inner
            .frames
            .iter()
            .map(|f| {
                f.readings
                    .iter()
                    .find(|(s, _)| *s == id)
                    .map(|(_, c)| *c)
                    .ok_or_else(|| err(format!("sensor {id} is not in the stream")))
            })
            .collect()
    }

    /// Calibrated acceleration of one sensor in m/s².
    fn calibrated(&self, sensor_id: u32) -> PyResult<Vec<[f64; 3]>> {
        let id = sensor(sensor_id)?;
        let series = self.inner.calibrated_series().map_err(err)?;
        series
            .into_iter()
            .find(|(s, _)| *s == id)
            .map(|(_, v)| v)
            .ok_or_else(|| err(format!("sensor {id} is not in the stream")))
    }

    fn __len__(&self) -> usize {
        self.inner.frames.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "FrameStream({} frames, {} sensors, {} Hz, ±{} g)",
            self.inner.frames.len(),
            self.inner.sensors().len(),
            self.inner.rate,
            self.inner.range.g()
        )
    }
}

/// Result of decoding: the stream plus gaps and warnings.
#[pyclass(name = "Decoded", module = "handwave", get_all)]
struct PyDecoded {
    stream: Py<PyFrameStream>,
    /// `(last index before the gap, frames missing)` pairs.
    drops: Vec<(u64, u64)>,
    warnings: Vec<String>,
}

#[pyfunction]
fn decode_stream(py: Python<'_>, data: &[u8]) -> PyResult<PyDecoded> {
    let d = wire::decode_stream(data).map_err(err)?;
    Ok(PyDecoded {
        stream: Py::new(py, PyFrameStream { inner: d.stream })?,
        drops: d.drops.iter().map(|g| (g.after, g.missing)).collect(),
        warnings: d.warnings.iter().map(ToString::to_string).collect(),
    })
}

#[pyfunction]
#[pyo3(signature = (clock_hz = 1.6e6))]
fn schedule_throughput(clock_hz: f64) -> f64 {
    wire::schedule_throughput(clock_hz, &BusTopology::full())
}

/// Scalar channels, one per sensor, at a common rate.
#[pyclass(name = "ChannelSet", module = "handwave")]
struct PyChannelSet {
    inner: signal::ChannelSet,
}

#[pymethods]
impl PyChannelSet {
    /// Build from `{sensor_id: samples}`.
    #[new]
    #[pyo3(signature = (channels, rate = handwave_core::DEFAULT_RATE_HZ))]
    fn new(channels: std::collections::BTreeMap<u32, Vec<f64>>, rate: f64) -> PyResult<Self> {
        let chans = channels
            .into_iter()
            .map(|(id, s)| Ok(ScalarChannel::new(sensor(id)?, s)))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(PyChannelSet { inner: signal::ChannelSet::new(rate, chans).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (text, rate = handwave_core::DEFAULT_RATE_HZ))]
    fn from_csv(text: &str, rate: f64) -> PyResult<Self> {
        Ok(PyChannelSet { inner: signal::ChannelSet::from_csv(text, rate).map_err(err)? })
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate
    }

    fn sensors(&self) -> Vec<u32> {
        self.inner.sensors().map(|s| u32::from(s.get())).collect()
    }

    fn channel(&self, sensor_id: u32) -> PyResult<Vec<f64>> {
        let id = sensor(sensor_id)?;
        self.inner
            .channel(id)
            .map(|c| c.samples.clone())
            .ok_or_else(|| err(format!("no channel for sensor {id}")))
    }

    /// Trailing-window RMS per sensor.
    #[pyo3(signature = (window_ms = recon::RMS_WINDOW_MS))]
    fn rms(&self, window_ms: f64) -> PyResult<Vec<(u32, f64)>> {
        let map = signal::rms_map(&self.inner, window_ms).map_err(err)?;
        Ok(map.into_iter().map(|(s, v)| (u32::from(s.get()), v)).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Project every sensor of `stream` onto its sliding-window principal axis.
#[pyfunction]
#[pyo3(signature = (stream, window = signal::pca::DEFAULT_WINDOW, hop = None, centered = true))]
fn project(stream: &PyFrameStream, window: usize, hop: Option<usize>, centered: bool) -> PyResult<PyChannelSet> {
    let opts = ProjectionOptions { window, hop: hop.unwrap_or(window / 2), centered };
    let series = stream.inner.calibrated_series().map_err(err)?;
    let channels = signal::project_all(&series, &opts).map_err(err)?;
    Ok(PyChannelSet { inner: signal::ChannelSet::new(stream.inner.rate, channels).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (a, b, max_lag = None))]
fn similarity(a: &PyChannelSet, b: &PyChannelSet, max_lag: Option<usize>) -> PyResult<f64> {
    signal::similarity(&a.inner, &b.inner, &SimilarityOptions { max_lag }).map_err(err)
}

/// Full similarity matrix over `recordings`; entry `[i][j]` is S(i, j).
#[pyfunction]
#[pyo3(signature = (recordings, max_lag = None))]
fn similarity_matrix(recordings: Vec<PyRef<'_, PyChannelSet>>, max_lag: Option<usize>) -> PyResult<Vec<Vec<f64>>> {
    let named: Vec<(String, signal::ChannelSet)> =
        recordings.iter().enumerate().map(|(i, r)| (i.to_string(), r.inner.clone())).collect();
    Ok(signal::similarity_matrix(&named, &SimilarityOptions { max_lag }).map_err(err)?.values)
}

#[pyfunction]
fn cross_correlation(x: Vec<f64>, y: Vec<f64>, max_lag: usize) -> Vec<f64> {
    signal::cross_correlation(&x, &y, max_lag)
}

/// Hand surface graph in mm.
#[pyclass(name = "HandSurface", module = "handwave")]
struct PyHandSurface {
    inner: HandSurface,
}

#[pymethods]
impl PyHandSurface {
    /// The built-in hand fixture, optionally scaled.
    #[staticmethod]
    #[pyo3(signature = (hand_scale = 1.0))]
    fn fixture(hand_scale: f64) -> PyResult<Self> {
        let s = fixture_surface().and_then(|s| s.scaled(hand_scale)).map_err(err)?;
        Ok(PyHandSurface { inner: s })
    }

    #[staticmethod]
    #[pyo3(signature = (text, neighbors = DEFAULT_NEIGHBORS))]
    fn from_ply(text: &str, neighbors: usize) -> PyResult<Self> {
        let cloud = read_ply(text).map_err(err)?;
        Ok(PyHandSurface { inner: build_surface(&cloud, neighbors).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (text, neighbors = DEFAULT_NEIGHBORS))]
    fn from_xyz(text: &str, neighbors: usize) -> PyResult<Self> {
        let cloud = read_xyz(text).map_err(err)?;
        Ok(PyHandSurface { inner: build_surface(&cloud, neighbors).map_err(err)? })
    }

    fn vertex(&self, i: usize) -> PyResult<[f64; 3]> {
        if i >= self.inner.len() {
            return Err(err(format!("vertex {i} out of range")));
        }
        Ok(self.inner.vertex(i).into())
    }

    /// "palm", "I", ..., "V", or None when the cloud carried no labels.
    fn region(&self, i: usize) -> Option<String> {
        self.inner.region(i).map(|r| match r {
            handwave_core::Region::Palm => "palm".to_string(),
            handwave_core::Region::Digit(d) => d.roman().to_string(),
        })
    }

    fn geodesic(&self, a: usize, b: usize) -> PyResult<f64> {
        self.inner.geodesic(a, b).map_err(err)
    }

    fn distance_field(&self, source: usize) -> PyResult<Vec<f64>> {
        self.inner.distance_field(source).map_err(err)
    }

    fn nearest_vertex(&self, point: [f64; 3]) -> (usize, f64) {
        self.inner.nearest_vertex(&point.into())
    }

    fn scaled(&self, gamma: f64) -> PyResult<Self> {
        Ok(PyHandSurface { inner: self.inner.scaled(gamma).map_err(err)? })
    }

    fn warnings(&self) -> Vec<String> {
        self.inner.warnings().iter().map(ToString::to_string).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Reconstructed field over the surface vertices.
#[pyclass(name = "WaveField", module = "handwave")]
struct PyWaveField {
    inner: recon::WaveField,
}

#[pymethods]
impl PyWaveField {
    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(PyWaveField { inner: recon::WaveField::from_bytes(data).map_err(err)? })
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate
    }

    #[getter]
    fn vertices(&self) -> usize {
        self.inner.vertices
    }

    #[getter]
    fn frames(&self) -> usize {
        self.inner.frames
    }

    fn frame(&self, t: usize) -> PyResult<Vec<f64>> {
        if t >= self.inner.frames {
            return Err(err(format!("frame {t} out of range")));
        }
        Ok(self.inner.frame(t).to_vec())
    }

    fn series(&self, vertex: usize) -> PyResult<Vec<f64>> {
        if vertex >= self.inner.vertices {
            return Err(err(format!("vertex {vertex} out of range")));
        }
        Ok(self.inner.series(vertex))
    }

    /// Per-vertex RMS over the window ending at frame `end` (default: last).
    #[pyo3(signature = (window_ms = recon::RMS_WINDOW_MS, end = None))]
    fn rms(&self, window_ms: f64, end: Option<usize>) -> PyResult<Vec<f64>> {
        let end = end.unwrap_or(self.inner.frames).min(self.inner.frames);
        recon::rms_surface_map(&self.inner.slice(0, end), window_ms).map_err(err)
    }
}

/// Interpolation weights for one surface and the default sensor layout.
#[pyclass(name = "Reconstructor", module = "handwave")]
struct PyReconstructor {
    weights: WeightField,
}

#[pymethods]
impl PyReconstructor {
    #[new]
    #[pyo3(signature = (
        surface,
        hand_scale = 1.0,
        alpha = recon::DEFAULT_ALPHA_MM,
        c = recon::DEFAULT_C,
        gain = recon::DEFAULT_GAIN,
        rectify = true,
    ))]
    fn new(surface: &PyHandSurface, hand_scale: f64, alpha: f64, c: f64, gain: f64, rectify: bool) -> PyResult<Self> {
        let config = default_config(hand_scale).map_err(err)?;
        let registration = register_sensors(&surface.inner, &config).map_err(err)?;
        let params = WeightParams { gain, alpha, c, rectify };
        Ok(PyReconstructor { weights: recon::weight_field(&surface.inner, &registration, params).map_err(err)? })
    }

    /// Normalized weights of one vertex, in sensor order.
    fn weights(&self, vertex: usize) -> PyResult<Vec<f64>> {
        if vertex >= self.weights.vertices() {
            return Err(err(format!("vertex {vertex} out of range")));
        }
        Ok(self.weights.normalized(vertex).to_vec())
    }

    fn orphans(&self) -> Vec<usize> {
        self.weights.orphans()
    }

    fn reconstruct(&self, channels: &PyChannelSet) -> PyResult<PyWaveField> {
        Ok(PyWaveField { inner: recon::reconstruct(&channels.inner, &self.weights).map_err(err)? })
    }
}

/// Interpolation law φ(d) with the given constants.
#[pyfunction]
#[pyo3(signature = (d, alpha = recon::DEFAULT_ALPHA_MM, c = recon::DEFAULT_C, gain = recon::DEFAULT_GAIN))]
fn phi(d: f64, alpha: f64, c: f64, gain: f64) -> f64 {
    WeightParams { gain, alpha, c, rectify: true }.phi(d)
}

/// Shear wave speed of the default tissue, m/s.
#[pyfunction]
fn shear_speed() -> f64 {
    TissueParams::default().shear_speed()
}

/// Shear wavelength at `frequency` Hz for the default tissue, mm.
#[pyfunction]
fn wavelength(frequency: f64) -> PyResult<f64> {
    sim::wavelength(&TissueParams::default(), frequency).map_err(err)
}

/// Run a TOML scenario on `surface` (default: the fixture). Returns the
/// recorded stream and the ground-truth field.
#[pyfunction]
#[pyo3(signature = (scenario, surface = None, hand_scale = 1.0))]
fn simulate(scenario: &str, surface: Option<&PyHandSurface>, hand_scale: f64) -> PyResult<(PyFrameStream, PyWaveField)> {
    let scenario = Scenario::from_toml(scenario).map_err(err)?;
    let surface = match surface {
        Some(s) => s.inner.clone(),
        None => fixture_surface().and_then(|s| s.scaled(hand_scale)).map_err(err)?,
    };
    let config = default_config(hand_scale).map_err(err)?;
    let run = scenario.run(&surface, &config).map_err(err)?;
    Ok((PyFrameStream { inner: run.stream }, PyWaveField { inner: run.field }))
}

#[pymodule]
fn handwave(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("SENSOR_IDS", SensorId::all().map(|s| u32::from(s.get())).collect::<Vec<_>>())?;
    m.add_class::<PyFrameStream>()?;
    m.add_class::<PyDecoded>()?;
    m.add_class::<PyChannelSet>()?;
    m.add_class::<PyHandSurface>()?;
    m.add_class::<PyWaveField>()?;
    m.add_class::<PyReconstructor>()?;
    m.add_function(wrap_pyfunction!(decode_stream, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_throughput, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(similarity_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(cross_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(shear_speed, m)?)?;
    m.add_function(wrap_pyfunction!(wavelength, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
