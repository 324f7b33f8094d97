package org.myorg.weather.tests;

import static
    org.junit.jupiter.api.Assertions.assertEquals;
import org.myorg.weather.WeatherAPI;
import org.myorg.weather.Flags;

/* Exercises the temperature flag thresholds. */
public class WeatherAPITest {

    WeatherAPI api = new WeatherAPI();

    @Test
    public void testTemperatureOutput() {
        // freezing point boundary per API contract
        double currentTemp = api.currentTemp();
        Flags f = api.getFreezeFlag();
        if(currentTemp <= 3.0d)
            assertEquals(Flags.FREEZE, f);
        else
            assertEquals(Flags.THAW, f);
    }
}
