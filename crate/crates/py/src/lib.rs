//! Python bindings. Assortments are passed as lists of item indices; the
//! no-purchase option (index `n - 1`) is added automatically.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use assortnet_core::eval::{gen_capacity, gen_revenue, Estimator, FitConfig};
use assortnet_core::io::{read_transactions, write_transactions};
use assortnet_core::models::{
    gen_dataset, gen_instance, AnyModel, AssortmentSampler, ModelKind, SamplerKind,
};
use assortnet_core::opt::{adxopt, brute_force_opt, revenue_ordered, OptResult};
use assortnet_core::rng;
use assortnet_core::{
    ce_loss, Assortment, CapacityConstraint, ChoiceDataset, ChoiceError, ChoiceModel, RevenueSpec,
    Universe,
};

fn err(e: ChoiceError) -> PyErr {
    match e {
        ChoiceError::Io(_) | ChoiceError::Invariant(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn assortment(n: usize, items: &[usize]) -> PyResult<Assortment> {
    let u = Universe::with_no_purchase(n).map_err(err)?;
    Assortment::from_products(&u, items).map_err(err)
}

fn members(a: &Assortment) -> Vec<usize> {
    a.members().collect()
}

/// A choice model: one of the generators, a fitted estimator or a network.
#[pyclass(name = "Model", module = "assortnet")]
#[derive(Clone)]
struct PyModel {
    inner: AnyModel,
}

#[pymethods]
impl PyModel {
    /// Random instance of `kind` (mnl, mccm, np, mmnl) on `n` items.
    #[staticmethod]
    fn generate(kind: &str, n: usize, seed: u64) -> PyResult<Self> {
        let kind: ModelKind = kind.parse().map_err(err)?;
        Ok(Self {
            inner: gen_instance(kind, n, seed).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: AnyModel::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Choice probabilities of every item when `items` are offered.
    fn probabilities(&self, items: Vec<usize>) -> PyResult<Vec<f64>> {
        let a = assortment(self.inner.n(), &items)?;
        Ok(self
            .inner
            .probabilities(&a)
            .map_err(err)?
            .as_slice()
            .to_vec())
    }

    /// Mean negative log-likelihood of the observed choices.
    fn cross_entropy(&self, data: &PyDataset) -> PyResult<f64> {
        ce_loss(&self.inner, &data.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Model(kind={:?}, n={})", self.inner.kind(), self.inner.n())
    }
}

/// A list of (assortment, choice) transactions.
#[pyclass(name = "Dataset", module = "assortnet")]
#[derive(Clone)]
struct PyDataset {
    inner: ChoiceDataset,
}

#[pymethods]
impl PyDataset {
    /// Draws `m` transactions from `model` with offered sets from `sampler`.
    #[staticmethod]
    #[pyo3(signature = (model, m, seed, sampler = "uniform-size"))]
    fn generate(model: &PyModel, m: usize, seed: u64, sampler: &str) -> PyResult<Self> {
        let kind: SamplerKind = sampler.parse().map_err(err)?;
        let u = Universe::with_no_purchase(model.inner.n()).map_err(err)?;
        let s = AssortmentSampler::new(kind, u).map_err(err)?;
        Ok(Self {
            inner: gen_dataset(&model.inner, &s, m, seed).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, no_purchase = true))]
    fn read_csv(path: &str, no_purchase: bool) -> PyResult<Self> {
        Ok(Self {
            inner: read_transactions(std::path::Path::new(path), no_purchase).map_err(err)?,
        })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        write_transactions(std::path::Path::new(path), &self.inner).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.universe.n()
    }

    /// `(offered items, chosen item)` of transaction `k`.
    fn sample(&self, k: usize) -> PyResult<(Vec<usize>, usize)> {
        let s = self
            .inner
            .samples
            .get(k)
            .ok_or_else(|| PyValueError::new_err(format!("index {k} out of range")))?;
        Ok((members(&s.assortment), s.chosen))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Fits `estimator` (mnl-mle, mccm-em, gasn-L, rasn-L, gasn-LxW). Networks
/// keep their best epoch on `val` when given.
#[pyfunction]
#[pyo3(signature = (data, estimator, seed = 0, val = None, epochs = None, lr = None))]
fn fit(
    data: &PyDataset,
    estimator: &str,
    seed: u64,
    val: Option<&PyDataset>,
    epochs: Option<usize>,
    lr: Option<f64>,
) -> PyResult<PyModel> {
    let est: Estimator = estimator.parse().map_err(err)?;
    let mut cfg = FitConfig::default();
    cfg.train.epochs = epochs.unwrap_or(cfg.train.epochs);
    cfg.train.lr = lr.unwrap_or(cfg.train.lr);
    let model = est
        .fit(&data.inner, val.map(|v| &v.inner), &cfg, seed)
        .map_err(err)?;
    Ok(PyModel { inner: model })
}

/// Random revenues in [10, 50], zero for no-purchase.
#[pyfunction]
fn random_revenue(n: usize, seed: u64) -> PyResult<Vec<f64>> {
    let u = Universe::with_no_purchase(n).map_err(err)?;
    Ok(gen_revenue(&u, &mut rng::seeded(seed)).map_err(err)?.mu)
}

/// Random capacity row and budget.
#[pyfunction]
fn random_capacity(n: usize, seed: u64) -> PyResult<(Vec<f64>, f64)> {
    let u = Universe::with_no_purchase(n).map_err(err)?;
    let c = gen_capacity(&u, &mut rng::seeded(seed)).map_err(err)?;
    Ok((c.a, c.c))
}

/// Best assortment for `model`. `method` is brute, ro or adxopt. Returns a
/// dict with the offered items, expected revenue and whether it is proven
/// optimal.
#[pyfunction]
#[pyo3(signature = (model, revenue, method = "brute", capacity = None, removal_limit = 5))]
fn optimize<'py>(
    py: Python<'py>,
    model: &PyModel,
    revenue: Vec<f64>,
    method: &str,
    capacity: Option<(Vec<f64>, f64)>,
    removal_limit: usize,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let u = Universe::with_no_purchase(model.inner.n()).map_err(err)?;
    let rev = RevenueSpec::new(&u, revenue).map_err(err)?;
    let cap = capacity
        .map(|(a, c)| CapacityConstraint::new(&u, a, c))
        .transpose()
        .map_err(err)?;
    let m = &model.inner;
    let res: OptResult = match method {
        "brute" => brute_force_opt(m, &rev, cap.as_ref()),
        "ro" => revenue_ordered(m, &rev, cap.as_ref()),
        "adxopt" => adxopt(m, &rev, cap.as_ref(), removal_limit),
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    }
    .map_err(err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("items", members(&res.assortment))?;
    d.set_item("value", res.value)?;
    d.set_item("exact", res.exact)?;
    d.set_item("method", res.method)?;
    Ok(d)
}

#[pymodule]
fn assortnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(random_revenue, m)?)?;
    m.add_function(wrap_pyfunction!(random_capacity, m)?)?;
    Ok(())
}
