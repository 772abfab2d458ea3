use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A resolved location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
    /// ISO-3166 alpha-2, upper case.
    pub country_code: Option<String>,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64, country_code: Option<String>) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
            return Err(Error::Validation(format!(
                "coordinates out of range: ({latitude}, {longitude})"
            )));
        }
        let country_code = country_code
            .map(|c| c.trim().to_ascii_uppercase())
            .filter(|c| !c.is_empty());
        Ok(GeoPoint {
            latitude,
            longitude,
            country_code,
        })
    }
}

/// Resolves free-text locations. `Ok(None)` means the location is not
/// resolvable; `Err` is a transport failure.
pub trait Geocoder {
    fn lookup(&self, location: &str) -> Result<Option<GeoPoint>>;
}

/// Lookup cache keyed by the exact input string. Safe for concurrent reads.
#[derive(Debug, Default)]
pub struct GeoCache {
    entries: RwLock<HashMap<String, Option<GeoPoint>>>,
    unresolved: AtomicUsize,
    client_calls: AtomicUsize,
}

impl GeoCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, location: &str) -> Option<Option<GeoPoint>> {
        self.entries.read().expect("cache lock poisoned").get(location).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distinct inputs the client could not resolve.
    pub fn unresolved_count(&self) -> usize {
        self.unresolved.load(Ordering::Relaxed)
    }

    /// Number of times a client was consulted through this cache.
    pub fn client_calls(&self) -> usize {
        self.client_calls.load(Ordering::Relaxed)
    }
}

/// Resolves `location` through `cache`, consulting `client` only on a miss.
pub fn geocode(location: &str, client: &dyn Geocoder, cache: &GeoCache) -> Result<Option<GeoPoint>> {
    if location.trim().is_empty() {
        return Err(Error::Validation("geocoder input must be non-empty".into()));
    }
    if let Some(hit) = cache.get(location) {
        return Ok(hit);
    }
    cache.client_calls.fetch_add(1, Ordering::Relaxed);
    let resolved = client.lookup(location)?;
    let mut entries = cache.entries.write().expect("cache lock poisoned");
    if !entries.contains_key(location) {
        if resolved.is_none() {
            cache.unresolved.fetch_add(1, Ordering::Relaxed);
        }
        entries.insert(location.to_string(), resolved.clone());
    }
    Ok(resolved)
}

fn fold(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Deserialize)]
struct GazetteerRow {
    name: String,
    lat: f64,
    lon: f64,
    #[serde(default)]
    country_code: Option<String>,
}

/// Offline geocoder over a CSV file with columns `name,lat,lon,country_code`.
///
/// Matches the whole input case-insensitively, then its first
/// comma-separated component.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    places: HashMap<String, GeoPoint>,
}

impl Gazetteer {
    pub fn from_reader<R: std::io::Read>(r: R) -> Result<Self> {
        let mut places = HashMap::new();
        let mut reader = csv::Reader::from_reader(r);
        for (i, row) in reader.deserialize::<GazetteerRow>().enumerate() {
            let row = row.map_err(|e| Error::Validation(format!("gazetteer row {}: {e}", i + 2)))?;
            let point = GeoPoint::new(row.lat, row.lon, row.country_code)?;
            places.entry(fold(&row.name)).or_insert(point);
        }
        Ok(Gazetteer { places })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(f).map_err(|e| match e {
            Error::Validation(message) => Error::Format {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn len(&self) -> usize {
        self.places.len()
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty()
    }
}

impl Geocoder for Gazetteer {
    fn lookup(&self, location: &str) -> Result<Option<GeoPoint>> {
        let full = fold(location);
        if let Some(p) = self.places.get(&full) {
            return Ok(Some(p.clone()));
        }
        let head = full.split(',').next().unwrap_or("").trim();
        Ok(self.places.get(head).cloned())
    }
}

#[derive(Debug, Deserialize)]
struct HttpAnswer {
    lat: Option<f64>,
    lon: Option<f64>,
    #[serde(default)]
    country_code: Option<String>,
}

/// Geocoder speaking `GET <endpoint>?q=<location>` with a JSON answer
/// `{"lat": .., "lon": .., "country_code": ..}`. A 404 or null coordinates
/// mean unresolvable.
pub struct HttpGeocoder {
    agent: ureq::Agent,
    endpoint: String,
    retries: u32,
    backoff: Duration,
}

impl HttpGeocoder {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        HttpGeocoder {
            agent,
            endpoint: endpoint.into(),
            retries: 2,
            backoff: Duration::from_millis(250),
        }
    }

    pub fn with_retries(mut self, retries: u32, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    fn attempt(&self, location: &str) -> std::result::Result<Option<GeoPoint>, String> {
        let mut resp = self
            .agent
            .get(&self.endpoint)
            .query("q", location)
            .call()
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        if status == 404 {
            return Ok(None);
        }
        if !(200..300).contains(&status) {
            return Err(format!("HTTP {status}"));
        }
        let body = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        let answer: HttpAnswer = serde_json::from_str(&body).map_err(|e| format!("bad response: {e}"))?;
        match (answer.lat, answer.lon) {
            (Some(lat), Some(lon)) => GeoPoint::new(lat, lon, answer.country_code)
                .map(Some)
                .map_err(|e| e.to_string()),
            _ => Ok(None),
        }
    }
}

impl Geocoder for HttpGeocoder {
    fn lookup(&self, location: &str) -> Result<Option<GeoPoint>> {
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.saturating_pow(attempt - 1));
            }
            match self.attempt(location) {
                Ok(p) => return Ok(p),
                Err(e) => last = e,
            }
        }
        Err(Error::Lookup {
            input: location.to_string(),
            message: last,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    const GAZ: &str = "name,lat,lon,country_code\nBerlin,52.52,13.405,de\nNew York,40.71,-74.0,US\nNowhere Island,0,0,\n";

    struct Counting<'a> {
        inner: &'a Gazetteer,
        calls: Cell<usize>,
    }

    impl Geocoder for Counting<'_> {
        fn lookup(&self, location: &str) -> Result<Option<GeoPoint>> {
            self.calls.set(self.calls.get() + 1);
            self.inner.lookup(location)
        }
    }

    #[test]
    fn point_ranges() {
        assert!(GeoPoint::new(91.0, 0.0, None).is_err());
        assert!(GeoPoint::new(0.0, -180.5, None).is_err());
        assert_eq!(GeoPoint::new(1.0, 2.0, Some(" de ".into())).unwrap().country_code.as_deref(), Some("DE"));
    }

    #[test]
    fn gazetteer_lookup() {
        let g = Gazetteer::from_reader(GAZ.as_bytes()).unwrap();
        assert_eq!(g.len(), 3);
        let p = g.lookup("Berlin, Germany").unwrap().unwrap();
        assert_eq!(p.country_code.as_deref(), Some("DE"));
        assert!(g.lookup("new   york").unwrap().is_some());
        assert!(g.lookup("Atlantis").unwrap().is_none());
        assert_eq!(g.lookup("Nowhere Island").unwrap().unwrap().country_code, None);
    }

    #[test]
    fn cache_contract() {
        let g = Gazetteer::from_reader(GAZ.as_bytes()).unwrap();
        let client = Counting { inner: &g, calls: Cell::new(0) };
        let cache = GeoCache::new();
        let a = geocode("Berlin, Germany", &client, &cache).unwrap();
        let b = geocode("Berlin, Germany", &client, &cache).unwrap();
        assert_eq!(a, b);
        assert_eq!(client.calls.get(), 1);
        assert!(geocode("Atlantis", &client, &cache).unwrap().is_none());
        assert!(geocode("Atlantis", &client, &cache).unwrap().is_none());
        assert_eq!(client.calls.get(), 2);
        assert_eq!(cache.unresolved_count(), 1);
        assert!(matches!(geocode("  ", &client, &cache), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_gazetteer_row() {
        assert!(Gazetteer::from_reader("name,lat,lon,country_code\nX,abc,1,DE\n".as_bytes()).is_err());
        assert!(Gazetteer::from_reader("name,lat,lon,country_code\nX,99,1,DE\n".as_bytes()).is_err());
    }
}
